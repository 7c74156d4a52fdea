#pragma once

// Skip-gram with negative sampling over walk corpora, in whole-token
// (word2vec) and character n-gram (fastText) modes.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "xrec/alias_sampler.hpp"
#include "xrec/walks.hpp"

namespace xrec {

struct Vocabulary {
  std::vector<std::string> tokens;    // by descending frequency, then token
  std::vector<std::uint64_t> counts;
  std::unordered_map<std::string, std::uint32_t> index;
  std::vector<double> negative_distribution;  // count^0.75, normalized

  std::size_t size() const { return tokens.size(); }
  std::optional<std::uint32_t> find(const std::string& token) const;
};

Vocabulary build_vocab(const WalkCorpus& corpus, double power = 0.75);

/// (center, context) for every ordered pair of positions at distance <= window.
template <class T>
std::vector<std::pair<T, T>> training_pairs(std::span<const T> walk, std::size_t window) {
  std::vector<std::pair<T, T>> pairs;
  const std::size_t n = walk.size();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= window ? i - window : 0;
    const std::size_t hi = std::min(n - 1, i + window);
    for (std::size_t j = lo; j <= hi; ++j) {
      if (j != i) pairs.emplace_back(walk[i], walk[j]);
    }
  }
  return pairs;
}

struct SgnsConfig {
  std::size_t dim = 128;
  std::size_t window = 10;
  std::size_t negatives = 5;
  std::size_t epochs = 5;
  double learning_rate = 0.025;  // decays linearly to 1e-4 of its start value
  bool subword = false;
  std::size_t min_n = 3;
  std::size_t max_n = 6;
  std::uint64_t seed = 1;
  /// Lock-free shared updates across threads. Nondeterministic.
  bool hogwild = false;
  std::size_t threads = 1;

  void validate() const;
};

/// Character n-grams of `<token>` with lengths in [min_n, max_n], excluding
/// the fully wrapped token itself.
std::vector<std::string> char_ngrams(const std::string& token, std::size_t min_n, std::size_t max_n);

class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  /// Input vectors uniform in [-0.5/d, 0.5/d], output vectors zero.
  static EmbeddingTable initialize(const Vocabulary& vocab, const SgnsConfig& config);

  std::size_t dim() const { return static_cast<std::size_t>(input_.rows()); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  bool subword() const { return subword_; }
  std::size_t min_n() const { return min_n_; }
  std::size_t max_n() const { return max_n_; }
  std::optional<std::uint32_t> find(const std::string& token) const;

  const Eigen::MatrixXd& input() const { return input_; }    // d x V
  const Eigen::MatrixXd& output() const { return output_; }  // d x V
  const Eigen::MatrixXd& ngram_input() const { return ngrams_; }  // d x G
  Eigen::MatrixXd& input() { return input_; }
  Eigen::MatrixXd& output() { return output_; }
  Eigen::MatrixXd& ngram_input() { return ngrams_; }

  std::optional<std::uint32_t> find_ngram(const std::string& gram) const;
  /// n-gram rows used by vocabulary token `i` in subword mode.
  const std::vector<std::uint32_t>& ngrams_of(std::uint32_t i) const { return token_ngrams_[i]; }

  /// Center representation used in training: the input row in whole-token
  /// mode, the mean of the input row and its n-gram rows in subword mode.
  Eigen::VectorXd center_vector(std::uint32_t i) const;

  /// Matrix of exported node vectors (d x V), in token order.
  Eigen::MatrixXd export_vectors() const;

  bool all_finite() const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::uint32_t> index_;
  Eigen::MatrixXd input_;
  Eigen::MatrixXd output_;
  bool subword_ = false;
  std::size_t min_n_ = 3;
  std::size_t max_n_ = 6;
  Eigen::MatrixXd ngrams_;
  std::unordered_map<std::string, std::uint32_t> ngram_index_;
  std::vector<std::vector<std::uint32_t>> token_ngrams_;
};

/// Loss -log s(u_ctx.v) - sum_k log s(-u_k.v) for one center/context pair
/// and its negatives (columns of `negatives`), with analytic gradients.
struct SgnsGradient {
  double loss = 0.0;
  Eigen::VectorXd d_center;
  Eigen::VectorXd d_context;
  Eigen::MatrixXd d_negatives;
};

SgnsGradient sgns_loss(const Eigen::Ref<const Eigen::VectorXd>& center,
                       const Eigen::Ref<const Eigen::VectorXd>& context,
                       const Eigen::Ref<const Eigen::MatrixXd>& negatives);

/// In-place SGD step used by training: updates output columns `targets`
/// (first positive, the rest negative) and returns the loss. `center_step`
/// receives -lr * dLoss/dcenter, to be applied by the caller.
double sgns_update(const Eigen::Ref<const Eigen::VectorXd>& center, Eigen::MatrixXd& output,
                   std::span<const std::uint32_t> targets, double lr,
                   Eigen::Ref<Eigen::VectorXd> center_step);

struct SgnsResult {
  EmbeddingTable table;
  std::vector<double> epoch_loss;  // mean per-pair loss
};

SgnsResult train_skipgram(const WalkCorpus& corpus, const SgnsConfig& config);

/// fastText-style composition: mean over the whole-token vector (when in the
/// vocabulary) and every known n-gram vector. Unknown everything -> zeros.
Eigen::VectorXd subword_vector(const std::string& token, const EmbeddingTable& table);

/// N_e lookup. Whole-token mode throws LookupError for unknown tokens.
Eigen::VectorXd node_embedding(const EmbeddingTable& table, const std::string& node_id);

double cosine(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b);

}  // namespace xrec
