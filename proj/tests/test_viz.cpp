#include <filesystem>
#include <random>
#include <set>

#include <Eigen/Geometry>
#include <gtest/gtest.h>

#include "xrec/error.hpp"
#include "xrec/pca.hpp"
#include "xrec/scatter.hpp"
#include "xrec/text.hpp"

using namespace xrec;

namespace {

double max_distance_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < a.rows(); ++j) {
      worst = std::max(worst, std::abs((a.row(i) - a.row(j)).norm() - (b.row(i) - b.row(j)).norm()));
    }
  }
  return worst;
}

}  // namespace

TEST(Pca, LineCapturesAllVariance) {
  Eigen::MatrixXd pts(6, 2);
  for (int i = 0; i < 6; ++i) pts.row(i) << i - 2.0, 2.0 * (i - 2.0);
  const auto proj = pca_project(pts, 2);
  EXPECT_NEAR(proj.explained(0), 1.0, 1e-12);
  EXPECT_NEAR(proj.explained(1), 0.0, 1e-12);
  const Eigen::MatrixXd first = proj.coords.col(0) * proj.directions.col(0).transpose();
  const Eigen::MatrixXd rebuilt = first.rowwise() + proj.mean.transpose();
  EXPECT_LT((rebuilt - pts).cwiseAbs().maxCoeff(), 1e-9);
  // Sign convention: the y coordinate dominates the direction and is positive.
  EXPECT_GT(proj.directions(1, 0), 0.0);
}

TEST(Pca, PlanarPointsKeepDistances) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  const Eigen::Vector3d u = Eigen::Vector3d(1, 2, -1).normalized();
  const Eigen::Vector3d v = u.cross(Eigen::Vector3d(0.3, -1, 2)).normalized();
  Eigen::MatrixXd pts(40, 3);
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    pts.row(i) = (g(rng) * 3.0 * u + g(rng) * v + Eigen::Vector3d(5, -2, 7)).transpose();
  }
  const auto proj = pca_project(pts, 2);
  EXPECT_LT(max_distance_error(pts, proj.coords), 1e-9);
  EXPECT_NEAR(proj.explained.sum(), 1.0, 1e-12);
  EXPECT_LT((proj.directions.transpose() * proj.directions - Eigen::Matrix2d::Identity()).norm(), 1e-12);
}

TEST(Pca, DuplicatedPointsGetDuplicatedCoordinates) {
  std::mt19937_64 rng(2);
  Eigen::MatrixXd base = Eigen::MatrixXd::Random(5, 4);
  Eigen::MatrixXd twice(10, 4);
  twice << base, base;
  const auto proj = pca_project(twice);
  EXPECT_EQ(proj.coords.topRows(5), proj.coords.bottomRows(5));
  const auto again = pca_project(twice);
  EXPECT_EQ(again.coords, proj.coords);
}

TEST(Pca, TranslationInvariant) {
  const Eigen::MatrixXd pts = Eigen::MatrixXd::Random(12, 5);
  const Eigen::RowVectorXd shift = Eigen::RowVectorXd::LinSpaced(5, -3, 40);
  const Eigen::MatrixXd moved = pts.rowwise() + shift;
  EXPECT_LT((pca_project(pts).coords - pca_project(moved).coords).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Pca, DegenerateAndInvalidInput) {
  const Eigen::MatrixXd same = Eigen::MatrixXd::Constant(4, 3, 2.5);
  const auto proj = pca_project(same);
  EXPECT_TRUE(proj.degenerate);
  EXPECT_TRUE(proj.coords.isZero(0.0));
  EXPECT_EQ(proj.coords.rows(), 4);
  EXPECT_THROW(pca_project(Eigen::MatrixXd::Zero(1, 3)), ValidationError);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(3, 2);
  bad(1, 1) = std::nan("");
  EXPECT_THROW(pca_project(bad), ValidationError);
}

TEST(Scatter, ThreeGroupsInCsvAndSvg) {
  std::vector<ScatterPoint> pts;
  for (int i = 0; i < 9; ++i) pts.push_back({"v" + std::to_string(i), i * 0.5, -i * 0.25, "g" + std::to_string(i % 3)});
  const auto csv = format_scatter_csv(pts);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "node,x,y,group");
  std::set<std::string> groups;
  for (const auto& p : parse_scatter_csv(csv)) groups.insert(p.group);
  EXPECT_EQ(groups.size(), 3u);
  const auto svg = render_scatter_svg(pts, "experts");
  EXPECT_EQ(svg.rfind("<svg", 0) == 0 || svg.rfind("<?xml", 0) == 0, true);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  for (const auto& g : groups) EXPECT_NE(svg.find(">" + g + "<"), std::string::npos) << g;
}

TEST(Scatter, EmptyInputIsHeaderOnly) {
  EXPECT_EQ(format_scatter_csv({}), "node,x,y,group\n");
  EXPECT_TRUE(parse_scatter_csv("node,x,y,group\n").empty());
}

TEST(Scatter, RoundTripAtPrintedPrecision) {
  const std::vector<ScatterPoint> pts{{"a", 1.0 / 3.0, -2e-7, "g0"}, {"b", 12345.678901234, 0.0, "g1"}};
  const auto csv = format_scatter_csv(pts, "config_hash=abc");
  EXPECT_EQ(csv.rfind("# config_hash=abc\n", 0), 0u);
  const auto back = parse_scatter_csv(csv);
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back[i].node, pts[i].node);
    EXPECT_EQ(back[i].group, pts[i].group);
    EXPECT_NEAR(back[i].x, pts[i].x, 1e-9 * std::max(1.0, std::abs(pts[i].x)));
    EXPECT_NEAR(back[i].y, pts[i].y, 1e-9);
  }
  EXPECT_EQ(format_scatter_csv(back, "config_hash=abc"), csv);
  EXPECT_THROW(parse_scatter_csv("node,x,y,group\na,1,zz,g\n"), ParseError);
}

TEST(Scatter, ExportWritesBothFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "xrec_test_scatter";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const std::vector<ScatterPoint> pts{{"a", 0, 0, "g0"}, {"b", 1, 1, "g1"}};
  export_scatter(pts, dir / "s.csv", dir / "s.svg");
  EXPECT_EQ(text::read_file(dir / "s.csv"), format_scatter_csv(pts));
  EXPECT_TRUE(std::filesystem::exists(dir / "s.svg"));
  // A regular file where a directory is needed.
  EXPECT_ANY_THROW(export_scatter(pts, dir / "s.csv" / "nested.csv"));
}
