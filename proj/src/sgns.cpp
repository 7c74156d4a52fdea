#include "xrec/sgns.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "xrec/error.hpp"
#include "xrec/parallel.hpp"
#include "xrec/text.hpp"

namespace xrec {

namespace {

double log_sigmoid(double x) { return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }
double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

std::optional<std::uint32_t> Vocabulary::find(const std::string& token) const {
  const auto it = index.find(token);
  if (it == index.end()) return std::nullopt;
  return it->second;
}

Vocabulary build_vocab(const WalkCorpus& corpus, double power) {
  std::vector<std::uint64_t> freq(corpus.tokens.size(), 0);
  for (const auto& walk : corpus.walks) {
    for (auto t : walk) ++freq[t];
  }
  std::vector<std::uint32_t> order;
  for (std::uint32_t t = 0; t < freq.size(); ++t) {
    if (freq[t] > 0) order.push_back(t);
  }
  if (order.empty()) throw ValidationError("build_vocab: empty corpus");
  std::sort(order.begin(), order.end(), [&](auto a, auto b) {
    if (freq[a] != freq[b]) return freq[a] > freq[b];
    return corpus.tokens[a] < corpus.tokens[b];
  });
  Vocabulary vocab;
  double total = 0.0;
  for (auto t : order) {
    vocab.index.emplace(corpus.tokens[t], static_cast<std::uint32_t>(vocab.tokens.size()));
    vocab.tokens.push_back(corpus.tokens[t]);
    vocab.counts.push_back(freq[t]);
    vocab.negative_distribution.push_back(std::pow(static_cast<double>(freq[t]), power));
    total += vocab.negative_distribution.back();
  }
  for (auto& w : vocab.negative_distribution) w /= total;
  return vocab;
}

void SgnsConfig::validate() const {
  if (dim < 1) throw ValidationError("sgns: dim must be >= 1");
  if (window < 1) throw ValidationError("sgns: window must be >= 1");
  if (negatives < 1) throw ValidationError("sgns: negatives must be >= 1");
  if (!(learning_rate >= 0.0)) throw ValidationError("sgns: learning rate must be >= 0");
  if (subword && (min_n < 1 || max_n < min_n)) throw ValidationError("sgns: bad n-gram range");
}

std::vector<std::string> char_ngrams(const std::string& token, std::size_t min_n, std::size_t max_n) {
  const std::string wrapped = "<" + token + ">";
  std::vector<std::string> grams;
  for (std::size_t n = min_n; n <= max_n; ++n) {
    if (n > wrapped.size()) break;
    for (std::size_t i = 0; i + n <= wrapped.size(); ++i) {
      if (n == wrapped.size()) continue;
      grams.push_back(wrapped.substr(i, n));
    }
  }
  return grams;
}

EmbeddingTable EmbeddingTable::initialize(const Vocabulary& vocab, const SgnsConfig& config) {
  config.validate();
  EmbeddingTable t;
  t.tokens_ = vocab.tokens;
  t.index_ = vocab.index;
  t.subword_ = config.subword;
  t.min_n_ = config.min_n;
  t.max_n_ = config.max_n;
  const auto d = static_cast<Eigen::Index>(config.dim);
  const auto v = static_cast<Eigen::Index>(vocab.size());
  std::mt19937_64 rng(config.seed);
  const double bound = 0.5 / static_cast<double>(config.dim);
  std::uniform_real_distribution<double> init(-bound, bound);
  t.input_.resize(d, v);
  for (Eigen::Index c = 0; c < v; ++c) {
    for (Eigen::Index r = 0; r < d; ++r) t.input_(r, c) = init(rng);
  }
  t.output_ = Eigen::MatrixXd::Zero(d, v);
  if (config.subword) {
    t.token_ngrams_.resize(vocab.size());
    for (std::size_t i = 0; i < vocab.size(); ++i) {
      for (const auto& g : char_ngrams(vocab.tokens[i], config.min_n, config.max_n)) {
        const auto [it, inserted] =
            t.ngram_index_.try_emplace(g, static_cast<std::uint32_t>(t.ngram_index_.size()));
        auto& ids = t.token_ngrams_[i];
        if (std::find(ids.begin(), ids.end(), it->second) == ids.end()) ids.push_back(it->second);
      }
    }
    t.ngrams_.resize(d, static_cast<Eigen::Index>(t.ngram_index_.size()));
    for (Eigen::Index c = 0; c < t.ngrams_.cols(); ++c) {
      for (Eigen::Index r = 0; r < d; ++r) t.ngrams_(r, c) = init(rng);
    }
  } else {
    t.token_ngrams_.assign(vocab.size(), {});
    t.ngrams_.resize(d, 0);
  }
  return t;
}

std::optional<std::uint32_t> EmbeddingTable::find(const std::string& token) const {
  const auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::uint32_t> EmbeddingTable::find_ngram(const std::string& gram) const {
  const auto it = ngram_index_.find(gram);
  if (it == ngram_index_.end()) return std::nullopt;
  return it->second;
}

Eigen::VectorXd EmbeddingTable::center_vector(std::uint32_t i) const {
  Eigen::VectorXd h = input_.col(i);
  if (!subword_) return h;
  const auto& grams = token_ngrams_[i];
  for (auto g : grams) h += ngrams_.col(g);
  h /= static_cast<double>(1 + grams.size());
  return h;
}

Eigen::MatrixXd EmbeddingTable::export_vectors() const {
  Eigen::MatrixXd out(input_.rows(), input_.cols());
  for (std::uint32_t i = 0; i < tokens_.size(); ++i) out.col(i) = center_vector(i);
  return out;
}

bool EmbeddingTable::all_finite() const {
  return input_.allFinite() && output_.allFinite() && ngrams_.allFinite();
}

SgnsGradient sgns_loss(const Eigen::Ref<const Eigen::VectorXd>& center,
                       const Eigen::Ref<const Eigen::VectorXd>& context,
                       const Eigen::Ref<const Eigen::MatrixXd>& negatives) {
  SgnsGradient g;
  const double pos = context.dot(center);
  g.loss = -log_sigmoid(pos);
  const double g_pos = sigmoid(pos) - 1.0;
  g.d_center = g_pos * context;
  g.d_context = g_pos * center;
  g.d_negatives.resize(negatives.rows(), negatives.cols());
  for (Eigen::Index k = 0; k < negatives.cols(); ++k) {
    const double s = negatives.col(k).dot(center);
    g.loss -= log_sigmoid(-s);
    const double g_neg = sigmoid(s);
    g.d_center += g_neg * negatives.col(k);
    g.d_negatives.col(k) = g_neg * center;
  }
  return g;
}

double sgns_update(const Eigen::Ref<const Eigen::VectorXd>& center, Eigen::MatrixXd& output,
                   std::span<const std::uint32_t> targets, double lr,
                   Eigen::Ref<Eigen::VectorXd> center_step) {
  double loss = 0.0;
  center_step.setZero();
  for (std::size_t k = 0; k < targets.size(); ++k) {
    auto u = output.col(targets[k]);
    const double label = k == 0 ? 1.0 : 0.0;
    const double f = u.dot(center);
    loss -= k == 0 ? log_sigmoid(f) : log_sigmoid(-f);
    const double g = (label - sigmoid(f)) * lr;
    center_step.noalias() += g * u;
    u.noalias() += g * center;
  }
  return loss;
}

namespace {

struct Trainer {
  const WalkCorpus& corpus;
  const SgnsConfig& config;
  const Vocabulary& vocab;
  EmbeddingTable& table;
  AliasSampler negatives;
  std::vector<std::int64_t> corpus_to_vocab;
  double total_positions = 1.0;

  /// Trains over walks [begin, end) for one epoch. Returns (loss sum, pairs).
  std::pair<double, std::size_t> run(std::size_t begin, std::size_t end, std::mt19937_64& rng,
                                     std::atomic<std::size_t>& processed) {
    const auto d = static_cast<Eigen::Index>(config.dim);
    Eigen::VectorXd h(d);
    Eigen::VectorXd step(d);
    std::vector<std::uint32_t> targets;
    targets.reserve(config.negatives + 1);
    std::vector<std::uint32_t> walk;
    double loss = 0.0;
    std::size_t pairs = 0;
    for (std::size_t w = begin; w < end; ++w) {
      walk.clear();
      for (auto t : corpus.walks[w]) {
        if (corpus_to_vocab[t] >= 0) walk.push_back(static_cast<std::uint32_t>(corpus_to_vocab[t]));
      }
      const std::size_t done = processed.fetch_add(walk.size());
      const double lr = config.learning_rate *
                        std::max(1e-4, 1.0 - static_cast<double>(done) / total_positions);
      const std::size_t n = walk.size();
      for (std::size_t i = 0; i < n; ++i) {
        const auto center = walk[i];
        const std::size_t lo = i >= config.window ? i - config.window : 0;
        const std::size_t hi = std::min(n - 1, i + config.window);
        for (std::size_t j = lo; j <= hi; ++j) {
          if (j == i) continue;
          targets.clear();
          targets.push_back(walk[j]);
          for (std::size_t k = 0; k < config.negatives; ++k) {
            const auto neg = static_cast<std::uint32_t>(negatives(rng));
            if (neg != walk[j]) targets.push_back(neg);
          }
          const auto& grams = table.ngrams_of(center);
          if (table.subword()) {
            h = table.center_vector(center);
          } else {
            h = table.input().col(center);
          }
          loss += sgns_update(h, table.output(), targets, lr, step);
          ++pairs;
          if (table.subword()) {
            step /= static_cast<double>(1 + grams.size());
            table.input().col(center) += step;
            for (auto g : grams) table.ngram_input().col(g) += step;
          } else {
            table.input().col(center) += step;
          }
        }
      }
    }
    return {loss, pairs};
  }
};

}  // namespace

SgnsResult train_skipgram(const WalkCorpus& corpus, const SgnsConfig& config) {
  config.validate();
  const auto vocab = build_vocab(corpus);
  SgnsResult result;
  result.table = EmbeddingTable::initialize(vocab, config);

  Trainer trainer{corpus, config, vocab, result.table,
                  AliasSampler(vocab.negative_distribution), {}, 1.0};
  trainer.corpus_to_vocab.assign(corpus.tokens.size(), -1);
  for (std::size_t t = 0; t < corpus.tokens.size(); ++t) {
    if (auto v = vocab.find(corpus.tokens[t])) trainer.corpus_to_vocab[t] = *v;
  }
  trainer.total_positions =
      static_cast<double>(corpus.num_tokens()) * static_cast<double>(config.epochs) + 1.0;

  std::atomic<std::size_t> processed{0};
  std::mt19937_64 rng(text::mix_seed(config.seed, 0x5e6e5));
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    double loss = 0.0;
    std::size_t pairs = 0;
    if (config.hogwild && config.threads > 1) {
      const std::size_t threads = config.threads;
      std::vector<std::pair<double, std::size_t>> parts(threads);
      const std::size_t walks = corpus.walks.size();
      parallel_for(threads, threads, [&](std::size_t t) {
        std::mt19937_64 local(text::mix_seed(config.seed, epoch, t));
        parts[t] = trainer.run(walks * t / threads, walks * (t + 1) / threads, local, processed);
      });
      for (const auto& [l, p] : parts) {
        loss += l;
        pairs += p;
      }
    } else {
      std::tie(loss, pairs) = trainer.run(0, corpus.walks.size(), rng, processed);
    }
    const double mean = pairs > 0 ? loss / static_cast<double>(pairs) : 0.0;
    if (!std::isfinite(mean) || !result.table.all_finite()) {
      std::ostringstream msg;
      msg << "skip-gram training diverged at epoch " << epoch + 1 << " (mean loss " << mean
          << ", learning rate " << config.learning_rate << "); lower the learning rate";
      throw NumericError(msg.str());
    }
    result.epoch_loss.push_back(mean);
  }
  return result;
}

Eigen::VectorXd subword_vector(const std::string& token, const EmbeddingTable& table) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(table.dim()));
  std::size_t parts = 0;
  if (auto i = table.find(token)) {
    v += table.input().col(*i);
    ++parts;
  }
  std::vector<std::uint32_t> seen;
  for (const auto& g : char_ngrams(token, table.min_n(), table.max_n())) {
    const auto id = table.find_ngram(g);
    if (!id || std::find(seen.begin(), seen.end(), *id) != seen.end()) continue;
    seen.push_back(*id);
    v += table.ngram_input().col(*id);
    ++parts;
  }
  if (parts > 0) v /= static_cast<double>(parts);
  return v;
}

Eigen::VectorXd node_embedding(const EmbeddingTable& table, const std::string& node_id) {
  if (table.subword()) {
    if (auto i = table.find(node_id)) return table.center_vector(*i);
    return subword_vector(node_id, table);
  }
  const auto i = table.find(node_id);
  if (!i) throw LookupError("no embedding for node '" + node_id + "'");
  return table.input().col(*i);
}

double cosine(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

}  // namespace xrec
