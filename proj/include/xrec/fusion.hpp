#pragma once

// Candidate representation [D_e ; N_e ; Hi] and the multi-label classifier
// on top of it: three ReLU dense layers produce E, a per-class sigmoid head
// turns E into subject-area probabilities.

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "xrec/error.hpp"
#include "xrec/graph.hpp"

namespace xrec {

template <class Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Widths of the fused feature spans.
struct FeatureLayout {
  Eigen::Index doc_dim = 512;
  Eigen::Index node_dim = 128;

  Eigen::Index size() const { return doc_dim + node_dim + 1; }
  Eigen::Index doc_offset() const { return 0; }
  Eigen::Index node_offset() const { return doc_dim; }
  Eigen::Index hindex_offset() const { return doc_dim + node_dim; }
};

template <class DA, class DB>
VecX<typename DA::Scalar> concat_features(const Eigen::MatrixBase<DA>& doc,
                                          const Eigen::MatrixBase<DB>& node,
                                          typename DA::Scalar hindex,
                                          const FeatureLayout* layout = nullptr) {
  using Scalar = typename DA::Scalar;
  if (layout && (doc.size() != layout->doc_dim || node.size() != layout->node_dim)) {
    throw ValidationError("concat_features: got " + std::to_string(doc.size()) + "+" +
                          std::to_string(node.size()) + ", expected " +
                          std::to_string(layout->doc_dim) + "+" + std::to_string(layout->node_dim));
  }
  if (!(hindex >= Scalar(0) && hindex <= Scalar(1))) {
    throw ValidationError("concat_features: normalized h-index outside [0,1]");
  }
  VecX<Scalar> out(doc.size() + node.size() + 1);
  out << doc, node, hindex;
  return out;
}

/// Zeroes (in place) the spans a unimodal variant drops.
enum class Modality { Fused, DocOnly, GraphOnly };
std::string to_string(Modality m);
Modality parse_modality(const std::string& name);

template <class Derived>
void apply_modality(Eigen::MatrixBase<Derived>& features, const FeatureLayout& layout, Modality m) {
  if (m == Modality::DocOnly) features.middleRows(layout.node_offset(), layout.node_dim).setZero();
  if (m == Modality::GraphOnly) features.middleRows(layout.doc_offset(), layout.doc_dim).setZero();
}

template <class Scalar>
struct FusionParams {
  std::array<MatX<Scalar>, 4> weights;  // W1, W2, W3, W_out; each out x in
  std::array<VecX<Scalar>, 4> biases;

  FusionParams zeros_like() const {
    FusionParams z;
    for (std::size_t i = 0; i < 4; ++i) {
      z.weights[i] = MatX<Scalar>::Zero(weights[i].rows(), weights[i].cols());
      z.biases[i] = VecX<Scalar>::Zero(biases[i].size());
    }
    return z;
  }
};

template <class Scalar = double>
class FusionModel {
 public:
  FusionModel() = default;

  /// He-uniform ReLU layers, Glorot-uniform head, zero biases.
  FusionModel(Eigen::Index input_dim, Eigen::Index hidden_dim, Eigen::Index final_dim,
              Eigen::Index num_classes, std::uint64_t seed) {
    if (input_dim < 1 || hidden_dim < 1 || final_dim < 1 || num_classes < 1) {
      throw ValidationError("FusionModel: all widths must be >= 1");
    }
    std::mt19937_64 rng(seed);
    const std::array<Eigen::Index, 5> dims{input_dim, hidden_dim, hidden_dim, final_dim, num_classes};
    for (std::size_t l = 0; l < 4; ++l) {
      const double fan_in = static_cast<double>(dims[l]);
      const double fan_out = static_cast<double>(dims[l + 1]);
      const double bound = l < 3 ? std::sqrt(6.0 / fan_in) : std::sqrt(6.0 / (fan_in + fan_out));
      std::uniform_real_distribution<double> dist(-bound, bound);
      auto& w = params_.weights[l];
      w.resize(dims[l + 1], dims[l]);
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = static_cast<Scalar>(dist(rng));
      }
      params_.biases[l] = VecX<Scalar>::Zero(dims[l + 1]);
    }
  }

  explicit FusionModel(FusionParams<Scalar> params) : params_(std::move(params)) { check_shapes(); }

  Eigen::Index input_dim() const { return params_.weights[0].cols(); }
  Eigen::Index hidden_dim() const { return params_.weights[0].rows(); }
  Eigen::Index final_dim() const { return params_.weights[2].rows(); }
  Eigen::Index num_classes() const { return params_.weights[3].rows(); }

  FusionParams<Scalar>& params() { return params_; }
  const FusionParams<Scalar>& params() const { return params_; }

  struct Cache {
    MatX<Scalar> input;
    std::array<MatX<Scalar>, 3> activations;  // post-ReLU outputs of the dense layers
    MatX<Scalar> logits;
  };

  /// E for a batch (one candidate per column).
  MatX<Scalar> embed(const MatX<Scalar>& x, Cache* cache = nullptr) const {
    if (x.rows() != input_dim()) {
      throw ValidationError("FusionModel: feature length " + std::to_string(x.rows()) +
                            " != " + std::to_string(input_dim()));
    }
    MatX<Scalar> h = x;
    if (cache) cache->input = x;
    for (std::size_t l = 0; l < 3; ++l) {
      h = ((params_.weights[l] * h).colwise() + params_.biases[l]).cwiseMax(Scalar(0));
      if (cache) cache->activations[l] = h;
    }
    return h;
  }

  MatX<Scalar> logits(const MatX<Scalar>& x, Cache* cache = nullptr) const {
    MatX<Scalar> z = (params_.weights[3] * embed(x, cache)).colwise() + params_.biases[3];
    if (cache) cache->logits = z;
    return z;
  }

  /// Per-class probabilities, C x batch. Throws NumericError on NaN.
  MatX<Scalar> forward(const MatX<Scalar>& x) const {
    MatX<Scalar> p = logits(x).unaryExpr([](Scalar z) { return sigmoid(z); });
    if (!p.allFinite()) throw NumericError("FusionModel::forward produced non-finite output");
    return p;
  }

  /// Mean binary cross-entropy over classes and batch, with gradients.
  Scalar loss(const MatX<Scalar>& x, const MatX<Scalar>& targets,
              FusionParams<Scalar>* grad = nullptr) const {
    Cache cache;
    const MatX<Scalar> z = logits(x, &cache);
    if (targets.rows() != z.rows() || targets.cols() != z.cols()) {
      throw ValidationError("FusionModel::loss: target shape mismatch");
    }
    const Scalar count = static_cast<Scalar>(z.size());
    Scalar total(0);
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const Scalar zi = z(i);
      total += std::max(zi, Scalar(0)) - zi * targets(i) + std::log1p(std::exp(-std::abs(zi)));
    }
    if (grad) {
      *grad = params_.zeros_like();
      MatX<Scalar> delta = (z.unaryExpr([](Scalar v) { return sigmoid(v); }) - targets) / count;
      for (std::size_t l = 4; l-- > 0;) {
        const MatX<Scalar>& below = l == 0 ? cache.input : cache.activations[l - 1];
        grad->weights[l] = delta * below.transpose();
        grad->biases[l] = delta.rowwise().sum();
        if (l == 0) break;
        delta = (params_.weights[l].transpose() * delta).array() *
                (cache.activations[l - 1].array() > Scalar(0)).template cast<Scalar>();
      }
    }
    return total / count;
  }

  static Scalar sigmoid(Scalar z) {
    if (z >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-z));
    const Scalar e = std::exp(z);
    return e / (Scalar(1) + e);
  }

 private:
  void check_shapes() const {
    for (std::size_t l = 0; l < 4; ++l) {
      if (params_.biases[l].size() != params_.weights[l].rows()) {
        throw ValidationError("FusionModel: bias/weight shape mismatch");
      }
      if (l > 0 && params_.weights[l].cols() != params_.weights[l - 1].rows()) {
        throw ValidationError("FusionModel: layer shapes do not chain");
      }
    }
  }

  FusionParams<Scalar> params_;
};

using FusionModeld = FusionModel<double>;

enum class Optimizer { SgdMomentum, Adam };

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  double learning_rate = 0.05;
  double momentum = 0.9;
  Optimizer optimizer = Optimizer::SgdMomentum;
  std::uint64_t seed = 1;
  double threshold = 0.5;
  std::size_t hidden_dim = 256;
  std::size_t final_dim = 256;  // width of the last ReLU layer (E)

  void validate() const;
};

/// Aligned training data, one candidate per column.
struct LabeledFeatures {
  std::vector<std::string> ids;
  Eigen::MatrixXd features;  // L_f x N
  Eigen::MatrixXd targets;   // C x N, multi-hot

  std::size_t size() const { return ids.size(); }
  LabeledFeatures subset(const std::vector<std::size_t>& columns) const;
};

struct FusionTrainResult {
  FusionModeld model;
  std::vector<double> loss_curve;  // mean training loss per epoch
};

/// Mini-batch training on mean per-class binary cross-entropy. Candidates are
/// put in id order before the seed-derived shuffles, so the result does not
/// depend on the order they were supplied in.
FusionTrainResult train_fusion(const LabeledFeatures& data, const TrainConfig& config);

/// Classes with probability >= threshold; the argmax alone if none clears it.
LabelSet predict_labels(const Eigen::Ref<const Eigen::VectorXd>& probabilities, double threshold);
/// The k most probable classes (ties to the lower index).
LabelSet predict_top_k(const Eigen::Ref<const Eigen::VectorXd>& probabilities, std::size_t k);

/// Self-describing text checkpoint, weights at full precision.
std::string format_checkpoint(const FusionModeld& model, const std::string& config_echo = {});
FusionModeld parse_checkpoint(const std::string& contents, const std::string& source = "<checkpoint>");
void save_checkpoint(const FusionModeld& model, const std::filesystem::path& path,
                     const std::string& config_echo = {});
FusionModeld load_checkpoint(const std::filesystem::path& path);

std::string format_loss_curve(const std::vector<double>& curve);

}  // namespace xrec
