#pragma once

// Randomly initialized Transformer encoder stack used to turn an article's
// token sequence into a fixed-size vector. Post-norm layers:
//   Y = LN(X + MHA(X)),  Z = LN(Y + FFN(Y)),  FFN(Y) = ReLU(Y W1 + b1) W2 + b2.

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace xrec {

using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

enum class Readout { Mean, Cls };

struct EncoderConfig {
  std::size_t layers = 4;
  std::size_t heads = 8;
  std::size_t model_dim = 512;
  std::size_t ff_dim = 2048;
  bool positional = true;
  Readout readout = Readout::Mean;
  std::uint64_t seed = 1;

  std::size_t key_dim() const { return model_dim / heads; }
  void validate() const;
  /// `key=value` lines.
  std::string serialize() const;
  static EncoderConfig parse(const std::string& text);
};

/// Row-wise layer normalization with gain and bias.
struct LayerNorm {
  RowVectorXd gain;
  RowVectorXd bias;
  double eps = 1e-5;

  explicit LayerNorm(Eigen::Index dim = 0)
      : gain(RowVectorXd::Ones(dim)), bias(RowVectorXd::Zero(dim)) {}

  struct Cache {
    MatrixXd normalized;
    VectorXd inv_std;
  };
  MatrixXd forward(const MatrixXd& x, Cache* cache = nullptr) const;
  /// Returns dL/dx and accumulates into d_gain / d_bias.
  MatrixXd backward(const MatrixXd& dy, const Cache& cache, RowVectorXd& d_gain,
                    RowVectorXd& d_bias) const;
};

/// h heads over column blocks of learned d_m x d_m projections, concatenated
/// and mixed by an output projection.
struct MultiHeadAttention {
  std::size_t heads = 1;
  MatrixXd wq, wk, wv, wo;

  MultiHeadAttention() = default;
  MultiHeadAttention(std::size_t model_dim, std::size_t heads, std::mt19937_64& rng);
  /// All projections identity.
  static MultiHeadAttention identity(std::size_t model_dim, std::size_t heads);

  std::size_t model_dim() const { return static_cast<std::size_t>(wq.rows()); }

  struct Cache {
    MatrixXd x, q, k, v, concat;
    std::vector<MatrixXd> weights;  // per head
  };
  struct Grad {
    MatrixXd wq, wk, wv, wo;
  };
  MatrixXd forward(const MatrixXd& x, Cache* cache = nullptr) const;
  MatrixXd backward(const MatrixXd& dy, const Cache& cache, Grad& grad) const;
};

struct EncoderLayer {
  MultiHeadAttention attention;
  LayerNorm norm1, norm2;
  MatrixXd w1, w2;
  RowVectorXd b1, b2;

  EncoderLayer() = default;
  EncoderLayer(const EncoderConfig& config, std::mt19937_64& rng);

  struct Cache {
    MultiHeadAttention::Cache attention;
    LayerNorm::Cache norm1, norm2;
    MatrixXd y, hidden_pre;
  };
  struct Grad {
    MultiHeadAttention::Grad attention;
    RowVectorXd gain1, bias1, gain2, bias2;
    MatrixXd w1, w2;
    RowVectorXd b1, b2;
  };
  MatrixXd forward(const MatrixXd& x, Cache* cache = nullptr) const;
  MatrixXd backward(const MatrixXd& dz, const Cache& cache, Grad& grad) const;
};

struct DocumentEmbedding {
  enum class Source { Encoded, Ingested };
  VectorXd vector;
  Source source = Source::Encoded;
  bool empty_input = false;  // zero vector produced for an empty document
};

class DocumentEncoder {
 public:
  explicit DocumentEncoder(const EncoderConfig& config);

  const EncoderConfig& config() const { return config_; }
  std::vector<EncoderLayer>& layers() { return layers_; }
  const std::vector<EncoderLayer>& layers() const { return layers_; }

  /// Deterministic N(0,1) vector per (token, seed); no vocabulary needed.
  RowVectorXd token_embedding(const std::string& token) const;
  /// Token embeddings (plus sinusoidal positions when enabled), CLS first
  /// when the readout is Cls.
  MatrixXd embed(const std::vector<std::string>& tokens) const;

  /// Final-layer token vectors for an embedded input.
  MatrixXd forward(const MatrixXd& x, std::vector<EncoderLayer::Cache>* caches = nullptr) const;
  /// dL/dx given dL/d(final output); per-layer gradients in `grads`.
  MatrixXd backward(const MatrixXd& d_out, const std::vector<EncoderLayer::Cache>& caches,
                    std::vector<EncoderLayer::Grad>& grads) const;

  /// Pooled article vector of length model_dim. Empty input -> zero vector
  /// with `empty_input` set.
  DocumentEmbedding encode(const std::vector<std::string>& tokens) const;

 private:
  EncoderConfig config_;
  std::vector<EncoderLayer> layers_;
};

RowVectorXd sinusoidal_position(std::size_t position, std::size_t dim);

}  // namespace xrec
