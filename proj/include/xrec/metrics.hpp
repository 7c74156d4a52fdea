#pragma once

// Multi-label precision, recall and F1, pooled (micro) and class-averaged (macro).

#include <cstdint>
#include <span>
#include <vector>

#include "xrec/graph.hpp"

namespace xrec {

struct ConfusionCounts {
  std::vector<std::int64_t> tp, fp, fn, tn;

  std::size_t num_classes() const { return tp.size(); }
};

ConfusionCounts confusion_counts(std::span<const LabelSet> predicted, std::span<const LabelSet> truth);

/// 2PR/(P+R), and 0 when P+R = 0.
double f1_from(double precision, double recall);

struct Scores {
  double micro_precision = 0.0;
  double micro_recall = 0.0;
  double micro_f1 = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  /// Classes whose precision or recall had a zero denominator (scored 0).
  std::size_t undefined_classes = 0;
  /// No positives predicted or present anywhere; every metric is 0.
  bool all_zero = false;
};

/// Macro precision/recall average the per-class values over all C classes;
/// macro F1 is the F1 of those two averages.
Scores score(const ConfusionCounts& counts);

inline double micro_f1(const ConfusionCounts& counts) { return score(counts).micro_f1; }
inline double macro_f1(const ConfusionCounts& counts) { return score(counts).macro_f1; }

}  // namespace xrec
