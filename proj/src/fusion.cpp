#include "xrec/fusion.hpp"

#include <algorithm>
#include <numeric>

#include "xrec/text.hpp"

namespace xrec {

std::string to_string(Modality m) {
  switch (m) {
    case Modality::Fused: return "fused";
    case Modality::DocOnly: return "doc";
    case Modality::GraphOnly: return "graph";
  }
  return "unknown";
}

Modality parse_modality(const std::string& name) {
  if (name == "fused") return Modality::Fused;
  if (name == "doc") return Modality::DocOnly;
  if (name == "graph") return Modality::GraphOnly;
  throw ValidationError("unknown modality '" + name + "' (fused|doc|graph)");
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw ValidationError("train: batch_size must be >= 1");
  if (!(learning_rate >= 0.0)) throw ValidationError("train: learning rate must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ValidationError("train: momentum in [0,1)");
  if (!(threshold > 0.0 && threshold < 1.0)) throw ValidationError("train: threshold in (0,1)");
  if (hidden_dim < 1 || final_dim < 1) throw ValidationError("train: layer widths must be >= 1");
}

LabeledFeatures LabeledFeatures::subset(const std::vector<std::size_t>& columns) const {
  LabeledFeatures out;
  out.features.resize(features.rows(), static_cast<Eigen::Index>(columns.size()));
  out.targets.resize(targets.rows(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) {
    const auto c = static_cast<Eigen::Index>(columns[j]);
    out.ids.push_back(ids[columns[j]]);
    out.features.col(static_cast<Eigen::Index>(j)) = features.col(c);
    out.targets.col(static_cast<Eigen::Index>(j)) = targets.col(c);
  }
  return out;
}

namespace {

class ParamOptimizer {
 public:
  ParamOptimizer(const TrainConfig& config, const FusionParams<double>& shape)
      : config_(config), m_(shape.zeros_like()), v_(shape.zeros_like()) {}

  void step(FusionParams<double>& params, const FusionParams<double>& grad) {
    ++t_;
    for (std::size_t l = 0; l < 4; ++l) {
      update(params.weights[l], grad.weights[l], m_.weights[l], v_.weights[l]);
      update(params.biases[l], grad.biases[l], m_.biases[l], v_.biases[l]);
    }
  }

 private:
  template <class P, class G>
  void update(P& p, const G& g, P& m, P& v) {
    const double lr = config_.learning_rate;
    if (config_.optimizer == Optimizer::SgdMomentum) {
      m = config_.momentum * m - lr * g;
      p += m;
      return;
    }
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseAbs2();
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  }

  const TrainConfig& config_;
  FusionParams<double> m_, v_;
  std::size_t t_ = 0;
};

}  // namespace

FusionTrainResult train_fusion(const LabeledFeatures& data, const TrainConfig& config) {
  config.validate();
  if (data.size() == 0) throw ValidationError("train_fusion: empty training set");
  if (data.features.cols() != static_cast<Eigen::Index>(data.size()) ||
      data.targets.cols() != static_cast<Eigen::Index>(data.size())) {
    throw ValidationError("train_fusion: features, targets and ids are not aligned");
  }
  std::vector<std::size_t> canonical(data.size());
  std::iota(canonical.begin(), canonical.end(), std::size_t{0});
  std::sort(canonical.begin(), canonical.end(),
            [&](auto a, auto b) { return data.ids[a] < data.ids[b]; });

  FusionTrainResult result;
  result.model = FusionModeld(data.features.rows(), static_cast<Eigen::Index>(config.hidden_dim),
                              static_cast<Eigen::Index>(config.final_dim), data.targets.rows(),
                              config.seed);
  ParamOptimizer optimizer(config, result.model.params());
  std::mt19937_64 rng(text::mix_seed(config.seed, 0xba7c4));
  std::vector<std::size_t> order = canonical;
  FusionParams<double> grad;
  Eigen::MatrixXd x, y;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const auto b = static_cast<Eigen::Index>(end - start);
      x.resize(data.features.rows(), b);
      y.resize(data.targets.rows(), b);
      for (std::size_t j = start; j < end; ++j) {
        const auto c = static_cast<Eigen::Index>(order[j]);
        x.col(static_cast<Eigen::Index>(j - start)) = data.features.col(c);
        y.col(static_cast<Eigen::Index>(j - start)) = data.targets.col(c);
      }
      const double loss = result.model.loss(x, y, &grad);
      if (!std::isfinite(loss)) {
        throw NumericError("fusion training diverged at epoch " + std::to_string(epoch + 1) +
                           " (loss " + std::to_string(loss) + ", learning rate " +
                           std::to_string(config.learning_rate) + ")");
      }
      total += loss * static_cast<double>(b);
      optimizer.step(result.model.params(), grad);
    }
    result.loss_curve.push_back(total / static_cast<double>(order.size()));
  }
  return result;
}

LabelSet predict_labels(const Eigen::Ref<const Eigen::VectorXd>& probabilities, double threshold) {
  LabelSet out(static_cast<std::size_t>(probabilities.size()));
  if (probabilities.size() == 0) return out;
  for (Eigen::Index c = 0; c < probabilities.size(); ++c) {
    if (probabilities(c) >= threshold) out.set(static_cast<std::size_t>(c));
  }
  if (out.none()) {
    Eigen::Index best = 0;
    probabilities.maxCoeff(&best);
    out.set(static_cast<std::size_t>(best));
  }
  return out;
}

LabelSet predict_top_k(const Eigen::Ref<const Eigen::VectorXd>& probabilities, std::size_t k) {
  const auto n = static_cast<std::size_t>(probabilities.size());
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) {
    return probabilities(static_cast<Eigen::Index>(a)) > probabilities(static_cast<Eigen::Index>(b));
  });
  LabelSet out(n);
  for (std::size_t i = 0; i < std::min(k, n); ++i) out.set(idx[i]);
  return out;
}

namespace {

template <class M>
void write_tensor(std::ostringstream& out, const std::string& name, const M& m) {
  out << "tensor " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out << ' ';
      out << text::format_g(m(r, c), 17);
    }
    out << '\n';
  }
}

}  // namespace

std::string format_checkpoint(const FusionModeld& model, const std::string& config_echo) {
  std::ostringstream out;
  out << "xrec-fusion-checkpoint 1\n";
  out << "input_dim " << model.input_dim() << "\nhidden_dim " << model.hidden_dim()
      << "\nfinal_dim " << model.final_dim() << "\nnum_classes " << model.num_classes() << '\n';
  std::istringstream echo(config_echo);
  std::string line;
  while (std::getline(echo, line)) {
    if (!line.empty()) out << "config " << line << '\n';
  }
  const auto& p = model.params();
  for (std::size_t l = 0; l < 4; ++l) {
    write_tensor(out, "W" + std::to_string(l + 1), p.weights[l]);
    write_tensor(out, "b" + std::to_string(l + 1), p.biases[l]);
  }
  out << "end\n";
  return out.str();
}

FusionModeld parse_checkpoint(const std::string& contents, const std::string& source) {
  std::istringstream in(contents);
  std::string line;
  std::size_t line_no = 0;
  auto next = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (!text::trim(line).empty()) return true;
    }
    return false;
  };
  if (!next() || text::trim(line) != "xrec-fusion-checkpoint 1") {
    throw ParseError(source, line_no, "not a fusion checkpoint");
  }
  FusionParams<double> p;
  std::array<bool, 8> seen{};
  while (next()) {
    const auto fields = text::split_ws(line);
    if (fields[0] == "end") break;
    if (fields[0] != "tensor") continue;  // header and config echo
    if (fields.size() != 4) throw ParseError(source, line_no, "bad tensor header");
    const std::string name(fields[1]);
    const auto rows = text::parse_int(fields[2], source, line_no);
    const auto cols = text::parse_int(fields[3], source, line_no);
    if (name.size() != 2 || (name[0] != 'W' && name[0] != 'b') || name[1] < '1' || name[1] > '4') {
      throw ParseError(source, line_no, "unknown tensor '" + name + "'");
    }
    const std::size_t l = static_cast<std::size_t>(name[1] - '1');
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      if (!next()) throw ParseError(source, line_no, "truncated tensor " + name);
      const auto vals = text::split_ws(line);
      if (static_cast<Eigen::Index>(vals.size()) != cols) {
        throw ParseError(source, line_no, "tensor row width mismatch");
      }
      for (Eigen::Index c = 0; c < cols; ++c) {
        m(r, c) = text::parse_double(vals[static_cast<std::size_t>(c)], source, line_no);
      }
    }
    if (name[0] == 'W') {
      p.weights[l] = std::move(m);
      seen[l] = true;
    } else {
      if (cols != 1) throw ParseError(source, line_no, "bias must be a column");
      p.biases[l] = m.col(0);
      seen[4 + l] = true;
    }
  }
  if (!std::all_of(seen.begin(), seen.end(), [](bool b) { return b; })) {
    throw ParseError(source, line_no, "checkpoint is missing tensors");
  }
  return FusionModeld(std::move(p));
}

void save_checkpoint(const FusionModeld& model, const std::filesystem::path& path,
                     const std::string& config_echo) {
  text::write_file(path, format_checkpoint(model, config_echo));
}

FusionModeld load_checkpoint(const std::filesystem::path& path) {
  return parse_checkpoint(text::read_file(path), path.string());
}

std::string format_loss_curve(const std::vector<double>& curve) {
  std::string out = "epoch,mean_loss\n";
  for (std::size_t e = 0; e < curve.size(); ++e) {
    out += std::to_string(e + 1) + "," + text::format_g(curve[e], 10) + "\n";
  }
  return out;
}

}  // namespace xrec
