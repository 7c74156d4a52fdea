#include "xrec/sweep.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "xrec/parallel.hpp"
#include "xrec/text.hpp"

namespace xrec {

std::vector<LabelSet> predict_all(const FusionModeld& model, const Eigen::MatrixXd& features,
                                  const EvalOptions& options) {
  const Eigen::MatrixXd probs = model.forward(features);
  std::vector<LabelSet> out;
  out.reserve(static_cast<std::size_t>(probs.cols()));
  for (Eigen::Index i = 0; i < probs.cols(); ++i) {
    out.push_back(options.rule == DecisionRule::Threshold
                      ? predict_labels(probs.col(i), options.threshold)
                      : predict_top_k(probs.col(i), options.top_k));
  }
  return out;
}

std::vector<LabelSet> label_sets(const Eigen::MatrixXd& targets) {
  std::vector<LabelSet> out;
  for (Eigen::Index i = 0; i < targets.cols(); ++i) {
    LabelSet s(static_cast<std::size_t>(targets.rows()));
    for (Eigen::Index c = 0; c < targets.rows(); ++c) {
      if (targets(c, i) > 0.5) s.set(static_cast<std::size_t>(c));
    }
    out.push_back(std::move(s));
  }
  return out;
}

Scores evaluate(const FusionModeld& model, const LabeledFeatures& test, const EvalOptions& options) {
  const auto predicted = predict_all(model, test.features, options);
  const auto truth = label_sets(test.targets);
  return score(confusion_counts(predicted, truth));
}

Split split_indices(const LabeledFeatures& data, double ratio, std::uint64_t seed, bool stratified) {
  const std::size_t n = data.size();
  std::vector<std::size_t> canonical(n);
  std::iota(canonical.begin(), canonical.end(), std::size_t{0});
  std::sort(canonical.begin(), canonical.end(),
            [&](auto a, auto b) { return data.ids[a] < data.ids[b]; });
  std::mt19937_64 rng(text::mix_seed(seed, 0x5b117));
  Split split;
  auto take = [&](std::vector<std::size_t> group) {
    std::shuffle(group.begin(), group.end(), rng);
    const auto k = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(group.size())));
    split.train.insert(split.train.end(), group.begin(), group.begin() + static_cast<std::ptrdiff_t>(k));
    split.test.insert(split.test.end(), group.begin() + static_cast<std::ptrdiff_t>(k), group.end());
  };
  if (!stratified) {
    take(canonical);
  } else {
    std::map<std::string, std::vector<std::size_t>> groups;
    for (auto i : canonical) {
      std::string key;
      for (Eigen::Index c = 0; c < data.targets.rows(); ++c) {
        key += data.targets(c, static_cast<Eigen::Index>(i)) > 0.5 ? '1' : '0';
      }
      groups[key].push_back(i);
    }
    for (auto& [key, members] : groups) take(std::move(members));
  }
  return split;
}

std::string SweepReport::format_csv(bool with_wall_time, const std::string& comment) const {
  std::string out;
  if (!comment.empty()) out += "# " + comment + "\n";
  out += "param,seed,micro_f1,macro_f1,wall_ms\n";
  for (const auto& r : rows) {
    out += r.param + "," + r.seed + "," + text::format_g(r.micro_f1, 10) + "," +
           text::format_g(r.macro_f1, 10) + "," +
           (with_wall_time ? text::format_g(std::round(r.wall_ms), 12) : std::string("0")) + "\n";
  }
  return out;
}

SweepReport SweepReport::parse_csv(const std::string& contents) {
  SweepReport report;
  std::istringstream in(contents);
  std::string line;
  bool header = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::is_blank_or_comment(line)) continue;
    if (header) {
      header = false;
      continue;
    }
    const auto f = text::split(text::trim(line), ',');
    if (f.size() != 5) throw ParseError("<report>", line_no, "expected 5 columns");
    report.rows.push_back({std::string(f[0]), std::string(f[1]),
                           text::parse_double(f[2], "<report>", line_no),
                           text::parse_double(f[3], "<report>", line_no),
                           text::parse_double(f[4], "<report>", line_no)});
  }
  return report;
}

std::pair<double, double> SweepReport::mean(const std::string& param) const {
  double micro = 0.0, macro = 0.0;
  std::size_t n = 0;
  for (const auto& r : rows) {
    if (r.param != param || r.seed == "mean") continue;
    micro += r.micro_f1;
    macro += r.macro_f1;
    ++n;
  }
  if (n == 0) return {0.0, 0.0};
  return {micro / static_cast<double>(n), macro / static_cast<double>(n)};
}

namespace {

struct Cell {
  std::string param;
  double ratio;
  std::size_t width;
  std::uint64_t seed;
};

SweepReport run_cells(const LabeledFeatures& data, const std::vector<Cell>& cells,
                      const std::vector<std::string>& params, const EvalOptions& options,
                      const std::function<FusionModeld(const LabeledFeatures&, const Cell&)>& build) {
  SweepReport report;
  std::vector<std::optional<SweepRow>> results(cells.size());
  std::vector<std::string> warnings(cells.size());
  parallel_for(cells.size(), options.threads, [&](std::size_t i) {
    const auto& cell = cells[i];
    const auto start = std::chrono::steady_clock::now();
    const auto split = split_indices(data, cell.ratio, cell.seed, options.stratified);
    if (split.train.empty() || split.test.empty()) {
      warnings[i] = "ratio " + cell.param + " leaves an empty train or test side; skipped";
      return;
    }
    const auto train = data.subset(split.train);
    const auto test = data.subset(split.test);
    const auto model = build(train, cell);
    const auto s = evaluate(model, test, options);
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    if (s.all_zero) warnings[i] = "param " + cell.param + ": all confusion counts zero";
    results[i] = SweepRow{cell.param, std::to_string(cell.seed), s.micro_f1, s.macro_f1, ms};
  });
  for (const auto& w : warnings) {
    if (!w.empty() && std::find(report.warnings.begin(), report.warnings.end(), w) == report.warnings.end()) {
      report.warnings.push_back(w);
    }
  }
  for (const auto& param : params) {
    SweepRow mean{param, "mean", 0.0, 0.0, 0.0};
    std::size_t n = 0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (cells[i].param != param || !results[i]) continue;
      report.rows.push_back(*results[i]);
      mean.micro_f1 += results[i]->micro_f1;
      mean.macro_f1 += results[i]->macro_f1;
      mean.wall_ms += results[i]->wall_ms;
      ++n;
    }
    if (n > 0) {
      const double dn = static_cast<double>(n);
      mean.micro_f1 /= dn;
      mean.macro_f1 /= dn;
      mean.wall_ms /= dn;
      report.rows.push_back(mean);
    }
  }
  return report;
}

}  // namespace

SweepReport sweep_train_ratio(const LabeledFeatures& data, const ModelBuilder& builder,
                              std::span<const double> ratios, std::span<const std::uint64_t> seeds,
                              const EvalOptions& options) {
  std::vector<Cell> cells;
  std::vector<std::string> params;
  SweepReport invalid;
  for (double r : ratios) {
    const auto name = text::format_g(r, 6);
    if (!(r > 0.0 && r < 1.0)) {
      invalid.warnings.push_back("ratio " + name + " outside (0,1); skipped");
      continue;
    }
    params.push_back(name);
    for (auto s : seeds) cells.push_back({name, r, 0, s});
  }
  auto report = run_cells(data, cells, params, options,
                          [&](const LabeledFeatures& train, const Cell& c) { return builder(train, c.seed); });
  report.warnings.insert(report.warnings.begin(), invalid.warnings.begin(), invalid.warnings.end());
  return report;
}

SweepReport sweep_dimension(const LabeledFeatures& data, const WidthModelBuilder& builder,
                            std::span<const std::size_t> widths, std::span<const std::uint64_t> seeds,
                            double ratio, const EvalOptions& options) {
  if (widths.empty()) throw ValidationError("sweep_dimension: no widths given");
  std::vector<Cell> cells;
  std::vector<std::string> params;
  for (auto w : widths) {
    const auto name = std::to_string(w);
    params.push_back(name);
    for (auto s : seeds) cells.push_back({name, ratio, w, s});
  }
  return run_cells(data, cells, params, options, [&](const LabeledFeatures& train, const Cell& c) {
    return builder(train, c.width, c.seed);
  });
}

std::vector<double> default_ratios() { return {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}; }

}  // namespace xrec
