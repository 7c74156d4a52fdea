#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace xrec {

/// Walker/Vose alias table: O(n) construction, O(1) draws from a finite
/// discrete distribution given by nonnegative weights.
class AliasSampler {
 public:
  AliasSampler() = default;
  explicit AliasSampler(std::span<const double> weights);

  template <class Rng>
  std::size_t operator()(Rng& rng) const {
    const auto i = std::uniform_int_distribution<std::size_t>(0, prob_.size() - 1)(rng);
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    return u < prob_[i] ? i : alias_[i];
  }

  std::size_t size() const { return prob_.size(); }
  bool empty() const { return prob_.empty(); }
  /// Normalized input weight of outcome i.
  double probability(std::size_t i) const { return normalized_[i]; }

 private:
  std::vector<double> prob_;
  std::vector<std::uint32_t> alias_;
  std::vector<double> normalized_;
};

}  // namespace xrec
