#include <algorithm>
#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "support.hpp"
#include "xrec/attention.hpp"
#include "xrec/documents.hpp"
#include "xrec/embedding_io.hpp"
#include "xrec/encoder.hpp"
#include "xrec/error.hpp"
#include "xrec/text.hpp"

using namespace xrec;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> g(0.0, sd);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = g(rng);
  return m;
}

EncoderConfig tiny_config(std::size_t layers = 1, std::size_t heads = 2, std::uint64_t seed = 3) {
  EncoderConfig c;
  c.layers = layers;
  c.heads = heads;
  c.model_dim = 8;
  c.ff_dim = 12;
  c.seed = seed;
  return c;
}

}  // namespace

TEST(Attention, SingleTokenReturnsV) {
  std::mt19937_64 rng(1);
  const auto q = random_matrix(1, 4, rng), k = random_matrix(1, 4, rng), v = random_matrix(1, 3, rng);
  EXPECT_EQ(scaled_dot_attention(q, k, v), v);
}

TEST(Attention, ZeroQueriesAverageValues) {
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(2, 3);
  std::mt19937_64 rng(2);
  const auto k = random_matrix(2, 3, rng);
  Eigen::MatrixXd v(2, 2);
  v << 1, 3, 3, 1;
  const auto out = scaled_dot_attention(q, k, v);
  for (Eigen::Index r = 0; r < 2; ++r) {
    EXPECT_DOUBLE_EQ(out(r, 0), 2.0);
    EXPECT_DOUBLE_EQ(out(r, 1), 2.0);
  }
}

TEST(Attention, SoftmaxRowsSumToOne) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::MatrixXd w;
    scaled_dot_attention(random_matrix(3, 4, rng), random_matrix(3, 4, rng), random_matrix(3, 4, rng), &w);
    for (Eigen::Index r = 0; r < w.rows(); ++r) EXPECT_NEAR(w.row(r).sum(), 1.0, 1e-12);
  }
}

TEST(Attention, SoftmaxStableForLargeScores) {
  Eigen::MatrixXd s(2, 3);
  s << 1000.0, 999.0, -1000.0, -1000.0, -1000.0, -1000.0;
  const auto p = softmax_rows(s);
  EXPECT_TRUE(p.allFinite());
  EXPECT_NEAR(p.row(0).sum(), 1.0, 1e-12);
  EXPECT_NEAR(p(0, 0), 1.0 / (1.0 + std::exp(-1.0)), 1e-12);
  EXPECT_NEAR(p(1, 1), 1.0 / 3.0, 1e-15);
}

TEST(Attention, DimensionMismatchRejected) {
  std::mt19937_64 rng(4);
  EXPECT_THROW(scaled_dot_attention(random_matrix(2, 3, rng), random_matrix(2, 4, rng), random_matrix(2, 2, rng)),
               ValidationError);
  EXPECT_THROW(scaled_dot_attention(random_matrix(2, 3, rng), random_matrix(2, 3, rng), random_matrix(3, 2, rng)),
               ValidationError);
  EXPECT_THROW(scaled_dot_attention(random_matrix(2, 0, rng), random_matrix(2, 0, rng), random_matrix(2, 2, rng)),
               ValidationError);
}

TEST(Attention, BackwardMatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  const Eigen::Index n = 3, dk = 4, dv = 2;
  const auto q = random_matrix(n, dk, rng), k = random_matrix(n, dk, rng), v = random_matrix(n, dv, rng);
  const auto r = random_matrix(n, dv, rng);
  Eigen::MatrixXd w;
  scaled_dot_attention(q, k, v, &w);
  const auto g = scaled_dot_attention_backward<double>(q, k, v, w, r);
  Eigen::VectorXd theta(q.size() + k.size() + v.size());
  theta << q.reshaped(), k.reshaped(), v.reshaped();
  auto loss = [&](const Eigen::VectorXd& t) {
    const Eigen::MatrixXd qq = t.head(q.size()).reshaped(n, dk);
    const Eigen::MatrixXd kk = t.segment(q.size(), k.size()).reshaped(n, dk);
    const Eigen::MatrixXd vv = t.tail(v.size()).reshaped(n, dv);
    return (scaled_dot_attention(qq, kk, vv).array() * r.array()).sum();
  };
  Eigen::VectorXd analytic(theta.size());
  analytic << g.dq.reshaped(), g.dk.reshaped(), g.dv.reshaped();
  EXPECT_LT(testkit::max_relative_error(analytic, testkit::numeric_gradient(loss, theta)), 1e-4);
}

TEST(MultiHead, IdentityProjectionsWithOneHeadReduceToAttention) {
  std::mt19937_64 rng(6);
  const auto x = random_matrix(4, 6, rng);
  const auto mha = MultiHeadAttention::identity(6, 1);
  EXPECT_TRUE(mha.forward(x).isApprox(scaled_dot_attention(x, x, x), 1e-14));
}

TEST(MultiHead, OutputShape) {
  std::mt19937_64 rng(7);
  MultiHeadAttention mha(8, 4, rng);
  for (Eigen::Index n : {1, 2, 5, 9}) {
    const auto y = mha.forward(random_matrix(n, 8, rng));
    EXPECT_EQ(y.rows(), n);
    EXPECT_EQ(y.cols(), 8);
  }
  EXPECT_THROW(mha.forward(random_matrix(2, 6, rng)), ValidationError);
}

TEST(MultiHead, GradientOnTwoByEight) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    MultiHeadAttention mha(8, 2, rng);
    const auto x = random_matrix(2, 8, rng);
    const auto r = random_matrix(2, 8, rng);
    MultiHeadAttention::Cache cache;
    mha.forward(x, &cache);
    MultiHeadAttention::Grad grad{Eigen::MatrixXd::Zero(8, 8), Eigen::MatrixXd::Zero(8, 8),
                                  Eigen::MatrixXd::Zero(8, 8), Eigen::MatrixXd::Zero(8, 8)};
    const Eigen::MatrixXd dx = mha.backward(r, cache, grad);

    auto loss_x = [&](const Eigen::VectorXd& t) {
      return (mha.forward(t.reshaped(2, 8)).array() * r.array()).sum();
    };
    EXPECT_LT(testkit::max_relative_error(dx.reshaped(), testkit::numeric_gradient(loss_x, x.reshaped())), 1e-4);

    for (auto [param, g] : {std::pair{&mha.wq, &grad.wq}, {&mha.wk, &grad.wk}, {&mha.wv, &grad.wv},
                            {&mha.wo, &grad.wo}}) {
      const Eigen::MatrixXd keep = *param;
      auto loss_w = [&, param](const Eigen::VectorXd& t) {
        *param = t.reshaped(8, 8);
        return (mha.forward(x).array() * r.array()).sum();
      };
      const auto numeric = testkit::numeric_gradient(loss_w, keep.reshaped());
      *param = keep;
      EXPECT_LT(testkit::max_relative_error(g->reshaped(), numeric), 1e-4);
    }
  }
}

TEST(LayerNorm, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(9);
  LayerNorm ln(6);
  ln.gain = random_matrix(1, 6, rng);
  ln.bias = random_matrix(1, 6, rng);
  const auto x = random_matrix(3, 6, rng);
  const auto r = random_matrix(3, 6, rng);
  LayerNorm::Cache cache;
  ln.forward(x, &cache);
  Eigen::RowVectorXd dg = Eigen::RowVectorXd::Zero(6), db = Eigen::RowVectorXd::Zero(6);
  const Eigen::MatrixXd dx = ln.backward(r, cache, dg, db);
  auto loss = [&](const Eigen::VectorXd& t) { return (ln.forward(t.reshaped(3, 6)).array() * r.array()).sum(); };
  EXPECT_LT(testkit::max_relative_error(dx.reshaped(), testkit::numeric_gradient(loss, x.reshaped())), 1e-4);
}

TEST(Encoder, FullGradientOnTwoTokens) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    DocumentEncoder enc(tiny_config(1, 2, seed));
    std::mt19937_64 rng(seed);
    const Eigen::MatrixXd x = enc.embed({"alpha", "beta"});
    const auto r = random_matrix(x.rows(), x.cols(), rng);
    std::vector<EncoderLayer::Cache> caches;
    enc.forward(x, &caches);
    std::vector<EncoderLayer::Grad> grads;
    const Eigen::MatrixXd dx = enc.backward(r, caches, grads);
    auto objective = [&] { return (enc.forward(x).array() * r.array()).sum(); };

    auto loss_x = [&](const Eigen::VectorXd& t) {
      return (enc.forward(t.reshaped(x.rows(), x.cols())).array() * r.array()).sum();
    };
    EXPECT_LT(testkit::max_relative_error(dx.reshaped(), testkit::numeric_gradient(loss_x, x.reshaped())), 1e-4)
        << "input, seed " << seed;

    auto& layer = enc.layers()[0];
    const auto& g = grads[0];
    auto check = [&](auto& param, const auto& grad, const char* name) {
      using M = std::decay_t<decltype(param)>;
      const M keep = param;
      auto loss = [&](const Eigen::VectorXd& t) {
        param = t.reshaped(keep.rows(), keep.cols());
        return objective();
      };
      const auto numeric = testkit::numeric_gradient(loss, Eigen::VectorXd(keep.reshaped()));
      param = keep;
      EXPECT_LT(testkit::max_relative_error(Eigen::VectorXd(grad.reshaped()), numeric), 1e-4)
          << name << ", seed " << seed;
    };
    check(layer.attention.wq, g.attention.wq, "wq");
    check(layer.attention.wk, g.attention.wk, "wk");
    check(layer.attention.wv, g.attention.wv, "wv");
    check(layer.attention.wo, g.attention.wo, "wo");
    check(layer.w1, g.w1, "w1");
    check(layer.w2, g.w2, "w2");
    check(layer.b1, g.b1, "b1");
    check(layer.b2, g.b2, "b2");
    check(layer.norm1.gain, g.gain1, "gain1");
    check(layer.norm1.bias, g.bias1, "bias1");
    check(layer.norm2.gain, g.gain2, "gain2");
    check(layer.norm2.bias, g.bias2, "bias2");
  }
}

TEST(Encoder, EmptyDocumentGivesFlaggedZeroVector) {
  DocumentEncoder enc(EncoderConfig{});
  const auto e = enc.encode({});
  EXPECT_TRUE(e.empty_input);
  EXPECT_EQ(e.vector.size(), 512);
  EXPECT_TRUE(e.vector.isZero(0.0));
}

TEST(Encoder, SingleTokenIsItsFinalLayerVector) {
  DocumentEncoder enc(tiny_config(2, 2));
  const auto e = enc.encode({"gamma"});
  const Eigen::MatrixXd h = enc.forward(enc.embed({"gamma"}));
  EXPECT_EQ(e.vector, Eigen::VectorXd(h.row(0).transpose()));
  EXPECT_FALSE(e.empty_input);
}

TEST(Encoder, PermutationInvariantWithoutPositions) {
  auto cfg = tiny_config(2, 2);
  cfg.positional = false;
  DocumentEncoder enc(cfg);
  std::vector<std::string> doc{"a", "b", "c", "d", "e"};
  const auto base = enc.encode(doc).vector;
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 5; ++trial) {
    std::shuffle(doc.begin(), doc.end(), rng);
    EXPECT_LT((enc.encode(doc).vector - base).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Encoder, PositionsBreakPermutationInvariance) {
  DocumentEncoder enc(tiny_config(1, 2));
  EXPECT_GT((enc.encode({"a", "b", "c"}).vector - enc.encode({"c", "b", "a"}).vector).norm(), 1e-6);
}

TEST(Encoder, DeterministicAndSeeded) {
  const std::vector<std::string> doc{"graph", "walks", "embedding"};
  EXPECT_EQ(DocumentEncoder(tiny_config()).encode(doc).vector, DocumentEncoder(tiny_config()).encode(doc).vector);
  EXPECT_NE(DocumentEncoder(tiny_config(1, 2, 3)).encode(doc).vector,
            DocumentEncoder(tiny_config(1, 2, 4)).encode(doc).vector);
}

TEST(Encoder, ClsReadoutUsesFirstRow) {
  auto cfg = tiny_config();
  cfg.readout = Readout::Cls;
  DocumentEncoder enc(cfg);
  const Eigen::MatrixXd x = enc.embed({"a", "b"});
  ASSERT_EQ(x.rows(), 3);
  const Eigen::MatrixXd h = enc.forward(x);
  EXPECT_EQ(enc.encode({"a", "b"}).vector, Eigen::VectorXd(h.row(0).transpose()));
}

TEST(Encoder, ConfigValidationAndSerialization) {
  EncoderConfig c;
  c.heads = 3;
  EXPECT_THROW(c.validate(), ValidationError);
  c = EncoderConfig{};
  c.layers = 0;
  EXPECT_THROW(c.validate(), ValidationError);
  c = tiny_config();
  c.positional = false;
  c.readout = Readout::Cls;
  const auto back = EncoderConfig::parse(c.serialize());
  EXPECT_EQ(back.serialize(), c.serialize());
}

TEST(Documents, AverageExamples) {
  DocumentEmbedding a, b;
  a.vector = Eigen::Vector2d(1, 0);
  b.vector = Eigen::Vector2d(0, 1);
  const std::vector<DocumentEmbedding> both{a, b};
  EXPECT_EQ(average_documents(both, 2).vector, Eigen::VectorXd(Eigen::Vector2d(0.5, 0.5)));
  const std::vector<DocumentEmbedding> one{a};
  EXPECT_EQ(average_documents(one, 2).vector, a.vector);
}

TEST(Documents, AverageMatchesNaiveOracleAndIsPermutationInvariant) {
  std::mt19937_64 rng(11);
  std::vector<DocumentEmbedding> docs(3);
  for (auto& d : docs) d.vector = random_matrix(7, 1, rng);
  Eigen::VectorXd oracle = Eigen::VectorXd::Zero(7);
  for (Eigen::Index i = 0; i < 7; ++i) {
    double s = 0.0;
    for (const auto& d : docs) s += d.vector(i);
    oracle(i) = s / 3.0;
  }
  const auto avg = average_documents(docs, 7);
  EXPECT_LT((avg.vector - oracle).cwiseAbs().maxCoeff(), 1e-12);
  std::reverse(docs.begin(), docs.end());
  EXPECT_LT((average_documents(docs, 7).vector - avg.vector).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Documents, EmptyListFlagsMissingModality) {
  const auto avg = average_documents({}, 5);
  EXPECT_TRUE(avg.missing);
  EXPECT_TRUE(avg.vector.isZero(0.0));
  EXPECT_EQ(avg.vector.size(), 5);
}

TEST(Documents, MixedDimensionsRejected) {
  DocumentEmbedding a, b;
  a.vector = Eigen::VectorXd::Zero(2);
  b.vector = Eigen::VectorXd::Zero(3);
  const std::vector<DocumentEmbedding> docs{a, b};
  EXPECT_THROW(average_documents(docs, 2), ValidationError);
}

TEST(Ingest, ParsesRoundTripsAndRejectsRaggedRows) {
  const auto dir = std::filesystem::temp_directory_path() / "xrec_test_ingest";
  std::filesystem::create_directories(dir);
  std::mt19937_64 rng(12);
  const Eigen::MatrixXd v = random_matrix(512, 2, rng);
  save_embeddings(dir / "ok.emb", {"x", "y"}, v);
  const auto map = ingest_embeddings(dir / "ok.emb");
  ASSERT_EQ(map.size(), 2u);
  EXPECT_EQ(map.at("x").vector.size(), 512);
  EXPECT_EQ(map.at("y").source, DocumentEmbedding::Source::Ingested);
  EXPECT_TRUE(map.at("x").vector.isApprox(v.col(0), 1e-5));
  // Re-export and re-import is stable at the printed precision.
  Eigen::MatrixXd again(512, 2);
  again << map.at("x").vector, map.at("y").vector;
  EXPECT_EQ(format_embeddings({"x", "y"}, again), text::read_file(dir / "ok.emb"));

  std::string ragged = "2 512\nx";
  for (int i = 0; i < 512; ++i) ragged += " 0.5";
  ragged += "\ny";
  for (int i = 0; i < 300; ++i) ragged += " 0.5";
  ragged += "\n";
  text::write_file(dir / "bad.emb", ragged);
  try {
    ingest_embeddings(dir / "bad.emb");
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
  }
}
