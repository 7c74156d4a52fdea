#pragma once

// Walk corpora over the co-author graph: uniform/weighted (DeepWalk),
// second-order biased (Node2vec), and dominating-set constrained (ExEm).

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "xrec/graph.hpp"

namespace xrec {

/// Node subset such that every node is a member or adjacent to one.
struct DominatingSet {
  std::vector<NodeIndex> members;  // sorted ascending
  std::vector<char> mask;          // mask[v] != 0 iff v is a member

  bool contains(NodeIndex v) const { return mask[v] != 0; }
  std::size_t size() const { return members.size(); }
};

bool is_dominating(const ExpertGraph& graph, std::span<const NodeIndex> members);

DominatingSet make_dominating_set(const ExpertGraph& graph, std::vector<NodeIndex> members);

/// Greedy set-cover rule: repeatedly take the node whose closed neighborhood
/// covers the most still-uncovered nodes, lowest index on ties.
DominatingSet greedy_dominating_set(const ExpertGraph& graph);

enum class WalkStrategy { DeepWalk, Node2vec, ExEm };

std::string to_string(WalkStrategy s);
WalkStrategy parse_walk_strategy(const std::string& name);

struct WalkParams {
  WalkStrategy strategy = WalkStrategy::ExEm;
  std::size_t walks_per_node = 10;
  std::size_t walk_length = 80;
  double p = 1.0;
  double q = 1.0;
  bool weighted = true;
  std::size_t max_retries = 10;
  /// ExEm only: start walks at every node instead of only at dominating nodes.
  bool exem_start_from_all = false;
  std::uint64_t seed = 1;
  std::size_t threads = 1;

  void validate() const;
};

struct WalkCorpus {
  std::vector<std::string> tokens;               // token table (node ids)
  std::vector<std::vector<NodeIndex>> walks;     // indices into `tokens`
  WalkParams params;
  /// ExEm walks emitted without meeting the two-dominating-occurrence rule.
  std::size_t retry_exhausted = 0;

  std::size_t num_tokens() const;
};

/// Node2vec second-order step distribution over graph.neighbors(curr), in
/// adjacency order. Weight of x is w(curr,x) times 1/p (x == prev), 1 (x
/// adjacent to prev) or 1/q (otherwise), normalized to sum to one.
std::vector<double> node2vec_transition(const ExpertGraph& graph, NodeIndex prev, NodeIndex curr,
                                        double p, double q, bool weighted = true);

/// First-order step distribution over graph.neighbors(curr).
std::vector<double> deepwalk_transition(const ExpertGraph& graph, NodeIndex curr,
                                        bool weighted = true);

WalkCorpus walks_deepwalk(const ExpertGraph& graph, const WalkParams& params);
WalkCorpus walks_node2vec(const ExpertGraph& graph, const WalkParams& params);
WalkCorpus walks_exem(const ExpertGraph& graph, const DominatingSet& domset,
                      const WalkParams& params);

/// Dispatches on params.strategy (computing the greedy dominating set for ExEm).
WalkCorpus generate_walks(const ExpertGraph& graph, const WalkParams& params);

/// One walk per line; leading `#` lines record the strategy and parameters.
/// `extra_header` lines are emitted verbatim after the parameter line.
std::string format_corpus(const WalkCorpus& corpus, const std::vector<std::string>& extra_header = {});
WalkCorpus parse_corpus(const std::string& contents);
void save_corpus(const WalkCorpus& corpus, const std::filesystem::path& path,
                 const std::vector<std::string>& extra_header = {});
WalkCorpus load_corpus(const std::filesystem::path& path);

}  // namespace xrec
