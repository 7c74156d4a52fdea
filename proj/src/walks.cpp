#include "xrec/walks.hpp"

#include <algorithm>
#include <queue>
#include <random>
#include <sstream>
#include <unordered_map>

#include "xrec/alias_sampler.hpp"
#include "xrec/error.hpp"
#include "xrec/parallel.hpp"
#include "xrec/text.hpp"

namespace xrec {

bool is_dominating(const ExpertGraph& graph, std::span<const NodeIndex> members) {
  std::vector<char> covered(graph.num_nodes(), 0);
  for (auto m : members) {
    if (m >= graph.num_nodes()) return false;
    covered[m] = 1;
    for (const auto& n : graph.neighbors(m)) covered[n.node] = 1;
  }
  return std::all_of(covered.begin(), covered.end(), [](char c) { return c != 0; });
}

DominatingSet make_dominating_set(const ExpertGraph& graph, std::vector<NodeIndex> members) {
  std::sort(members.begin(), members.end());
  members.erase(std::unique(members.begin(), members.end()), members.end());
  DominatingSet d;
  d.mask.assign(graph.num_nodes(), 0);
  for (auto m : members) {
    if (m >= graph.num_nodes()) throw ValidationError("dominating set member out of range");
    d.mask[m] = 1;
  }
  d.members = std::move(members);
  return d;
}

DominatingSet greedy_dominating_set(const ExpertGraph& graph) {
  const std::size_t n = graph.num_nodes();
  if (n == 0) throw ValidationError("greedy_dominating_set: empty graph");
  std::vector<char> covered(n, 0);
  auto gain = [&](NodeIndex v) {
    std::size_t g = covered[v] ? 0 : 1;
    for (const auto& nb : graph.neighbors(v)) g += covered[nb.node] ? 0 : 1;
    return g;
  };
  // Lazy greedy: stale gains are upper bounds, so a popped entry whose fresh
  // key still beats the next stale key is the true (gain desc, index asc) max.
  using Key = std::pair<std::size_t, std::int64_t>;  // (gain, -index)
  std::priority_queue<Key> heap;
  for (NodeIndex v = 0; v < n; ++v) heap.emplace(gain(v), -static_cast<std::int64_t>(v));

  std::vector<NodeIndex> members;
  std::size_t uncovered = n;
  while (uncovered > 0) {
    const auto top = heap.top();
    heap.pop();
    const auto v = static_cast<NodeIndex>(-top.second);
    const Key fresh{gain(v), top.second};
    if (fresh.first == 0) continue;
    if (!heap.empty() && fresh < heap.top()) {
      heap.push(fresh);
      continue;
    }
    members.push_back(v);
    if (!covered[v]) {
      covered[v] = 1;
      --uncovered;
    }
    for (const auto& nb : graph.neighbors(v)) {
      if (!covered[nb.node]) {
        covered[nb.node] = 1;
        --uncovered;
      }
    }
  }
  return make_dominating_set(graph, std::move(members));
}

std::string to_string(WalkStrategy s) {
  switch (s) {
    case WalkStrategy::DeepWalk: return "deepwalk";
    case WalkStrategy::Node2vec: return "node2vec";
    case WalkStrategy::ExEm: return "exem";
  }
  return "unknown";
}

WalkStrategy parse_walk_strategy(const std::string& name) {
  if (name == "deepwalk") return WalkStrategy::DeepWalk;
  if (name == "node2vec") return WalkStrategy::Node2vec;
  if (name == "exem") return WalkStrategy::ExEm;
  throw ValidationError("unknown walk strategy '" + name + "' (deepwalk|node2vec|exem)");
}

void WalkParams::validate() const {
  if (walks_per_node < 1) throw ValidationError("walks_per_node must be >= 1");
  if (walk_length < 1) throw ValidationError("walk_length must be >= 1");
  if (!(p > 0.0) || !(q > 0.0)) throw ValidationError("node2vec p and q must be positive");
}

std::size_t WalkCorpus::num_tokens() const {
  std::size_t n = 0;
  for (const auto& w : walks) n += w.size();
  return n;
}

std::vector<double> deepwalk_transition(const ExpertGraph& graph, NodeIndex curr, bool weighted) {
  const auto nbrs = graph.neighbors(curr);
  std::vector<double> probs(nbrs.size());
  double total = 0.0;
  for (std::size_t i = 0; i < nbrs.size(); ++i) {
    probs[i] = weighted ? nbrs[i].weight : 1.0;
    total += probs[i];
  }
  for (auto& p : probs) p /= total;
  return probs;
}

namespace {

std::vector<double> node2vec_weights(const ExpertGraph& graph, NodeIndex prev, NodeIndex curr,
                                     double p, double q, bool weighted) {
  const auto nbrs = graph.neighbors(curr);
  std::vector<double> w(nbrs.size());
  for (std::size_t i = 0; i < nbrs.size(); ++i) {
    const auto x = nbrs[i].node;
    const double base = weighted ? nbrs[i].weight : 1.0;
    double bias;
    if (x == prev) {
      bias = 1.0 / p;
    } else if (graph.has_edge(x, prev)) {
      bias = 1.0;
    } else {
      bias = 1.0 / q;
    }
    w[i] = base * bias;
  }
  return w;
}

/// Per-node first-order samplers.
std::vector<AliasSampler> first_order_tables(const ExpertGraph& graph, bool weighted) {
  std::vector<AliasSampler> tables(graph.num_nodes());
  for (NodeIndex v = 0; v < graph.num_nodes(); ++v) {
    if (graph.is_isolated(v)) continue;
    const auto probs = deepwalk_transition(graph, v, weighted);
    tables[v] = AliasSampler(probs);
  }
  return tables;
}

std::vector<NodeIndex> first_order_walk(const ExpertGraph& graph,
                                        const std::vector<AliasSampler>& tables, NodeIndex start,
                                        std::size_t length, std::mt19937_64& rng) {
  std::vector<NodeIndex> walk;
  walk.reserve(length);
  walk.push_back(start);
  while (walk.size() < length) {
    const auto curr = walk.back();
    if (graph.is_isolated(curr)) break;
    walk.push_back(graph.neighbors(curr)[tables[curr](rng)].node);
  }
  return walk;
}

WalkCorpus empty_corpus(const ExpertGraph& graph, const WalkParams& params) {
  params.validate();
  WalkCorpus corpus;
  corpus.tokens = graph.node_ids();
  corpus.params = params;
  return corpus;
}

/// Fills corpus.walks with walks_per_node rounds over `starts`, ordered by
/// (round, start position); each walk has its own seed-derived generator.
template <class WalkFn>
void fill_rounds(WalkCorpus& corpus, const std::vector<NodeIndex>& starts,
                 const WalkParams& params, WalkFn&& walk_fn) {
  const std::size_t per_round = starts.size();
  corpus.walks.assign(per_round * params.walks_per_node, {});
  parallel_for(corpus.walks.size(), params.threads, [&](std::size_t slot) {
    const std::size_t round = slot / per_round;
    const NodeIndex start = starts[slot % per_round];
    std::mt19937_64 rng(text::mix_seed(params.seed, start, round));
    corpus.walks[slot] = walk_fn(start, rng);
  });
}

std::vector<NodeIndex> all_nodes(const ExpertGraph& graph) {
  std::vector<NodeIndex> v(graph.num_nodes());
  for (NodeIndex i = 0; i < v.size(); ++i) v[i] = i;
  return v;
}

}  // namespace

std::vector<double> node2vec_transition(const ExpertGraph& graph, NodeIndex prev, NodeIndex curr,
                                        double p, double q, bool weighted) {
  if (!(p > 0.0) || !(q > 0.0)) throw ValidationError("node2vec p and q must be positive");
  if (!graph.has_edge(prev, curr)) throw ValidationError("node2vec_transition: prev not adjacent to curr");
  auto w = node2vec_weights(graph, prev, curr, p, q, weighted);
  double total = 0.0;
  for (double x : w) total += x;
  for (auto& x : w) x /= total;
  return w;
}

WalkCorpus walks_deepwalk(const ExpertGraph& graph, const WalkParams& params) {
  auto corpus = empty_corpus(graph, params);
  const auto tables = first_order_tables(graph, params.weighted);
  fill_rounds(corpus, all_nodes(graph), params, [&](NodeIndex start, std::mt19937_64& rng) {
    return first_order_walk(graph, tables, start, params.walk_length, rng);
  });
  return corpus;
}

WalkCorpus walks_node2vec(const ExpertGraph& graph, const WalkParams& params) {
  auto corpus = empty_corpus(graph, params);
  const auto first = first_order_tables(graph, params.weighted);
  // edge_tables[curr][i]: step distribution when arriving at curr from its i-th neighbor.
  std::vector<std::vector<AliasSampler>> edge_tables(graph.num_nodes());
  parallel_for(graph.num_nodes(), params.threads, [&](std::size_t c) {
    const auto curr = static_cast<NodeIndex>(c);
    const auto nbrs = graph.neighbors(curr);
    edge_tables[curr].reserve(nbrs.size());
    for (const auto& prev : nbrs) {
      const auto w = node2vec_weights(graph, prev.node, curr, params.p, params.q, params.weighted);
      edge_tables[curr].emplace_back(w);
    }
  });
  auto position = [&](NodeIndex curr, NodeIndex prev) {
    const auto nbrs = graph.neighbors(curr);
    const auto it = std::lower_bound(nbrs.begin(), nbrs.end(), prev,
                                     [](const Neighbor& n, NodeIndex x) { return n.node < x; });
    return static_cast<std::size_t>(it - nbrs.begin());
  };
  fill_rounds(corpus, all_nodes(graph), params, [&](NodeIndex start, std::mt19937_64& rng) {
    std::vector<NodeIndex> walk;
    walk.reserve(params.walk_length);
    walk.push_back(start);
    while (walk.size() < params.walk_length) {
      const auto curr = walk.back();
      if (graph.is_isolated(curr)) break;
      std::size_t pick;
      if (walk.size() == 1) {
        pick = first[curr](rng);
      } else {
        const auto prev = walk[walk.size() - 2];
        pick = edge_tables[curr][position(curr, prev)](rng);
      }
      walk.push_back(graph.neighbors(curr)[pick].node);
    }
    return walk;
  });
  return corpus;
}

WalkCorpus walks_exem(const ExpertGraph& graph, const DominatingSet& domset,
                      const WalkParams& params) {
  if (domset.members.empty()) throw ValidationError("walks_exem: empty dominating set");
  if (domset.mask.size() != graph.num_nodes()) {
    throw ValidationError("walks_exem: dominating set does not match graph");
  }
  auto corpus = empty_corpus(graph, params);
  const auto tables = first_order_tables(graph, params.weighted);
  const auto starts = params.exem_start_from_all ? all_nodes(graph) : domset.members;
  auto occurrences = [&](const std::vector<NodeIndex>& walk) {
    std::size_t c = 0;
    for (auto v : walk) c += domset.contains(v) ? 1 : 0;
    return c;
  };
  fill_rounds(corpus, starts, params, [&](NodeIndex start, std::mt19937_64& rng) {
    std::vector<NodeIndex> best;
    std::size_t best_count = 0;
    const std::size_t attempts = params.walk_length >= 2 ? params.max_retries + 1 : 1;
    for (std::size_t a = 0; a < attempts; ++a) {
      auto walk = first_order_walk(graph, tables, start, params.walk_length, rng);
      const auto count = occurrences(walk);
      if (best.empty() || count > best_count) {
        best = std::move(walk);
        best_count = count;
      }
      if (best_count >= 2) break;
    }
    return best;
  });
  for (const auto& walk : corpus.walks) {
    if (occurrences(walk) < 2) ++corpus.retry_exhausted;
  }
  return corpus;
}

WalkCorpus generate_walks(const ExpertGraph& graph, const WalkParams& params) {
  switch (params.strategy) {
    case WalkStrategy::DeepWalk: return walks_deepwalk(graph, params);
    case WalkStrategy::Node2vec: return walks_node2vec(graph, params);
    case WalkStrategy::ExEm: return walks_exem(graph, greedy_dominating_set(graph), params);
  }
  throw ValidationError("unknown walk strategy");
}

std::string format_corpus(const WalkCorpus& corpus, const std::vector<std::string>& extra_header) {
  const auto& p = corpus.params;
  std::ostringstream out;
  out << "# strategy=" << to_string(p.strategy) << " walks_per_node=" << p.walks_per_node
      << " walk_length=" << p.walk_length << " p=" << text::format_g(p.p, 17)
      << " q=" << text::format_g(p.q, 17) << " weighted=" << (p.weighted ? 1 : 0)
      << " max_retries=" << p.max_retries << " start_from_all=" << (p.exem_start_from_all ? 1 : 0)
      << " seed=" << p.seed << " walks=" << corpus.walks.size()
      << " retry_exhausted=" << corpus.retry_exhausted << '\n';
  for (const auto& line : extra_header) out << "# " << line << '\n';
  for (const auto& walk : corpus.walks) {
    for (std::size_t i = 0; i < walk.size(); ++i) {
      if (i) out << ' ';
      out << corpus.tokens[walk[i]];
    }
    out << '\n';
  }
  return out.str();
}

WalkCorpus parse_corpus(const std::string& contents) {
  WalkCorpus corpus;
  std::unordered_map<std::string, NodeIndex> index;
  std::istringstream in(contents);
  std::string line;
  while (std::getline(in, line)) {
    const auto t = text::trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      for (auto field : text::split_ws(t.substr(1))) {
        const auto eq = field.find('=');
        if (eq == std::string_view::npos) continue;
        const auto key = field.substr(0, eq);
        const std::string value(field.substr(eq + 1));
        auto& p = corpus.params;
        try {
          if (key == "strategy") p.strategy = parse_walk_strategy(value);
          else if (key == "walks_per_node") p.walks_per_node = std::stoul(value);
          else if (key == "walk_length") p.walk_length = std::stoul(value);
          else if (key == "p") p.p = std::stod(value);
          else if (key == "q") p.q = std::stod(value);
          else if (key == "weighted") p.weighted = value == "1";
          else if (key == "max_retries") p.max_retries = std::stoul(value);
          else if (key == "start_from_all") p.exem_start_from_all = value == "1";
          else if (key == "seed") p.seed = std::stoull(value);
          else if (key == "retry_exhausted") corpus.retry_exhausted = std::stoul(value);
        } catch (const std::logic_error&) {
          // Header lines are informational; unknown formats are ignored.
        }
      }
      continue;
    }
    std::vector<NodeIndex> walk;
    for (auto tok : text::split_ws(t)) {
      const auto [it, inserted] =
          index.try_emplace(std::string(tok), static_cast<NodeIndex>(corpus.tokens.size()));
      if (inserted) corpus.tokens.emplace_back(tok);
      walk.push_back(it->second);
    }
    corpus.walks.push_back(std::move(walk));
  }
  return corpus;
}

void save_corpus(const WalkCorpus& corpus, const std::filesystem::path& path,
                 const std::vector<std::string>& extra_header) {
  text::write_file(path, format_corpus(corpus, extra_header));
}

WalkCorpus load_corpus(const std::filesystem::path& path) {
  return parse_corpus(text::read_file(path));
}

}  // namespace xrec
