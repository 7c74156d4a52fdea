#include "xrec/pca.hpp"

#include <algorithm>
#include <iostream>

#include <Eigen/SVD>

#include "xrec/error.hpp"

namespace xrec {

Projection pca_project(const Eigen::Ref<const Eigen::MatrixXd>& points, Eigen::Index k) {
  const Eigen::Index n = points.rows();
  const Eigen::Index d = points.cols();
  if (n < 2) throw ValidationError("pca_project: need at least 2 points");
  if (k < 1) throw ValidationError("pca_project: target dimension must be >= 1");
  if (!points.allFinite()) throw ValidationError("pca_project: non-finite input");

  Projection out;
  out.mean = points.colwise().mean().transpose();
  const Eigen::MatrixXd centered = points.rowwise() - out.mean.transpose();
  out.directions = Eigen::MatrixXd::Zero(d, k);
  out.coords = Eigen::MatrixXd::Zero(n, k);
  out.explained = Eigen::VectorXd::Zero(k);

  const double scale = centered.cwiseAbs().maxCoeff();
  if (scale == 0.0) {
    out.degenerate = true;
    std::cerr << "warning: pca_project: all points coincide; projecting to the origin\n";
    return out;
  }

  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double total = sv.squaredNorm();
  const Eigen::Index usable = std::min<Eigen::Index>(k, sv.size());
  const double tol = sv(0) * static_cast<double>(std::max(n, d)) * 1e-14;
  for (Eigen::Index j = 0; j < usable; ++j) {
    if (sv(j) <= tol) break;
    Eigen::VectorXd dir = svd.matrixV().col(j);
    Eigen::Index arg = 0;
    for (Eigen::Index i = 1; i < d; ++i) {
      if (std::abs(dir(i)) > std::abs(dir(arg)) * (1.0 + 1e-12)) arg = i;
    }
    if (dir(arg) < 0.0) dir = -dir;
    out.directions.col(j) = dir;
    out.explained(j) = sv(j) * sv(j) / total;
  }
  out.coords = centered * out.directions;
  return out;
}

}  // namespace xrec
