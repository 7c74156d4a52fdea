#pragma once

// Train/test evaluation protocol: train-ratio sweeps and final-layer width
// sweeps over several seeds.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "xrec/fusion.hpp"
#include "xrec/metrics.hpp"

namespace xrec {

enum class DecisionRule { Threshold, TopK };

struct EvalOptions {
  DecisionRule rule = DecisionRule::Threshold;
  double threshold = 0.5;
  std::size_t top_k = 1;
  bool stratified = false;
  std::size_t threads = 1;
};

std::vector<LabelSet> predict_all(const FusionModeld& model, const Eigen::MatrixXd& features,
                                  const EvalOptions& options);
std::vector<LabelSet> label_sets(const Eigen::MatrixXd& targets);

Scores evaluate(const FusionModeld& model, const LabeledFeatures& test, const EvalOptions& options);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Seed-derived random split of candidates (taken in id order) with
/// round(ratio * n) on the training side. The permutation depends only on the
/// seed, so training sets are nested across ratios. Stratified mode splits
/// each distinct label set separately.
Split split_indices(const LabeledFeatures& data, double ratio, std::uint64_t seed, bool stratified = false);

struct SweepRow {
  std::string param;
  std::string seed;  // seed value, or "mean"
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  double wall_ms = 0.0;
};

struct SweepReport {
  std::vector<SweepRow> rows;
  std::vector<std::string> warnings;

  /// `param,seed,micro_f1,macro_f1,wall_ms`. Without `with_wall_time` the
  /// wall_ms column is written as 0 so reruns are byte-identical.
  std::string format_csv(bool with_wall_time = false, const std::string& comment = {}) const;
  static SweepReport parse_csv(const std::string& contents);
  /// Mean micro/macro F1 over seed rows for `param`.
  std::pair<double, double> mean(const std::string& param) const;
};

/// Trains a model for one (training set, seed).
using ModelBuilder = std::function<FusionModeld(const LabeledFeatures& train, std::uint64_t seed)>;
/// Same, with the final ReLU layer width as a parameter.
using WidthModelBuilder =
    std::function<FusionModeld(const LabeledFeatures& train, std::size_t width, std::uint64_t seed)>;

SweepReport sweep_train_ratio(const LabeledFeatures& data, const ModelBuilder& builder,
                              std::span<const double> ratios, std::span<const std::uint64_t> seeds,
                              const EvalOptions& options = {});

SweepReport sweep_dimension(const LabeledFeatures& data, const WidthModelBuilder& builder,
                            std::span<const std::size_t> widths, std::span<const std::uint64_t> seeds,
                            double ratio = 0.5, const EvalOptions& options = {});

/// The standard 0.1, 0.2, ..., 0.9 grid.
std::vector<double> default_ratios();

}  // namespace xrec
