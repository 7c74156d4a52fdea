#include "xrec/metrics.hpp"

#include <cmath>
#include <optional>

#include "xrec/error.hpp"

namespace xrec {

namespace {

// Exact rational arithmetic so that macro averages and F1 are rounded once.
// Falls back to floating point when a denominator would grow too large.
struct Fraction {
  __int128 num = 0;
  __int128 den = 1;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

__int128 gcd128(__int128 a, __int128 b) {
  if (a < 0) a = -a;
  while (b != 0) {
    const __int128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

constexpr __int128 kLimit = static_cast<__int128>(1) << 62;

std::optional<Fraction> reduce(__int128 num, __int128 den) {
  if (den == 0) return Fraction{};
  const __int128 g = gcd128(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  if (den > kLimit || num > kLimit) return std::nullopt;
  return Fraction{num, den};
}

std::optional<Fraction> add(std::optional<Fraction> a, std::optional<Fraction> b) {
  if (!a || !b) return std::nullopt;
  return reduce(a->num * b->den + b->num * a->den, a->den * b->den);
}

std::optional<Fraction> mul(std::optional<Fraction> a, std::optional<Fraction> b) {
  if (!a || !b) return std::nullopt;
  return reduce(a->num * b->num, a->den * b->den);
}

std::optional<Fraction> f1_exact(std::optional<Fraction> p, std::optional<Fraction> r) {
  const auto sum = add(p, r);
  if (!sum) return std::nullopt;
  if (sum->num == 0) return Fraction{};
  return mul(mul(Fraction{2, 1}, mul(p, r)), Fraction{sum->den, sum->num});
}

}  // namespace

ConfusionCounts confusion_counts(std::span<const LabelSet> predicted, std::span<const LabelSet> truth) {
  if (predicted.size() != truth.size()) {
    throw ValidationError("confusion_counts: " + std::to_string(predicted.size()) +
                          " predictions for " + std::to_string(truth.size()) + " candidates");
  }
  const std::size_t c = truth.empty() ? (predicted.empty() ? 0 : predicted[0].size()) : truth[0].size();
  ConfusionCounts counts{std::vector<std::int64_t>(c, 0), std::vector<std::int64_t>(c, 0),
                         std::vector<std::int64_t>(c, 0), std::vector<std::int64_t>(c, 0)};
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (predicted[i].size() != c || truth[i].size() != c) {
      throw ValidationError("confusion_counts: label sets differ in width");
    }
    for (std::size_t k = 0; k < c; ++k) {
      const bool p = predicted[i].test(k);
      const bool t = truth[i].test(k);
      if (p && t) ++counts.tp[k];
      else if (p) ++counts.fp[k];
      else if (t) ++counts.fn[k];
      else ++counts.tn[k];
    }
  }
  return counts;
}

double f1_from(double precision, double recall) {
  const double sum = precision + recall;
  return sum > 0.0 ? 2.0 * precision * recall / sum : 0.0;
}

Scores score(const ConfusionCounts& counts) {
  Scores s;
  std::int64_t tp = 0, fp = 0, fn = 0;
  double pr_sum = 0.0, re_sum = 0.0;
  std::optional<Fraction> pr_exact = Fraction{}, re_exact = Fraction{};
  const std::size_t c = counts.num_classes();
  for (std::size_t k = 0; k < c; ++k) {
    tp += counts.tp[k];
    fp += counts.fp[k];
    fn += counts.fn[k];
    const auto pred_pos = counts.tp[k] + counts.fp[k];
    const auto true_pos = counts.tp[k] + counts.fn[k];
    if (pred_pos == 0 || true_pos == 0) ++s.undefined_classes;
    if (pred_pos > 0) {
      pr_sum += static_cast<double>(counts.tp[k]) / static_cast<double>(pred_pos);
      pr_exact = add(pr_exact, reduce(counts.tp[k], pred_pos));
    }
    if (true_pos > 0) {
      re_sum += static_cast<double>(counts.tp[k]) / static_cast<double>(true_pos);
      re_exact = add(re_exact, reduce(counts.tp[k], true_pos));
    }
  }
  s.all_zero = tp + fp + fn == 0;
  if (tp + fp > 0) s.micro_precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) s.micro_recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  // Same as f1_from(micro P, micro R), with one rounding.
  if (tp > 0) s.micro_f1 = static_cast<double>(2 * tp) / static_cast<double>(2 * tp + fp + fn);
  if (c == 0) return s;
  const Fraction per_class{1, static_cast<__int128>(c)};
  const auto macro_p = mul(pr_exact, per_class);
  const auto macro_r = mul(re_exact, per_class);
  const auto macro_f = f1_exact(macro_p, macro_r);
  if (macro_p && macro_r && macro_f) {
    s.macro_precision = macro_p->value();
    s.macro_recall = macro_r->value();
    s.macro_f1 = macro_f->value();
  } else {
    s.macro_precision = pr_sum / static_cast<double>(c);
    s.macro_recall = re_sum / static_cast<double>(c);
    s.macro_f1 = f1_from(s.macro_precision, s.macro_recall);
  }
  return s;
}

}  // namespace xrec
