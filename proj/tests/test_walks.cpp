#include <cmath>
#include <map>
#include <random>

#include <gtest/gtest.h>

#include "support.hpp"
#include "xrec/alias_sampler.hpp"
#include "xrec/error.hpp"
#include "xrec/walks.hpp"

using namespace xrec;

namespace {

ExpertGraph path5() {
  return testkit::graph_from_edges({{"v1", "v2"}, {"v2", "v3"}, {"v3", "v4"}, {"v4", "v5"}});
}

ExpertGraph star(std::size_t leaves) {
  GraphBuilder b;
  for (std::size_t i = 0; i < leaves; ++i) b.add_edge("c", "l" + std::to_string(i));
  return std::move(b).build();
}

ExpertGraph complete(std::size_t n) {
  GraphBuilder b;
  for (std::size_t i = 0; i < n; ++i) b.add_node("v" + std::to_string(i + 1));
  for (NodeIndex i = 0; i < n; ++i) {
    for (NodeIndex j = i + 1; j < n; ++j) b.add_edge(i, j);
  }
  return std::move(b).build();
}

std::vector<std::string> ids(const ExpertGraph& g, const DominatingSet& d) {
  std::vector<std::string> out;
  for (auto m : d.members) out.push_back(g.node_id(m));
  return out;
}

void expect_walks_are_paths(const ExpertGraph& g, const WalkCorpus& c) {
  for (const auto& w : c.walks) {
    ASSERT_FALSE(w.empty());
    EXPECT_LE(w.size(), c.params.walk_length);
    for (std::size_t i = 1; i < w.size(); ++i) EXPECT_TRUE(g.has_edge(w[i - 1], w[i]));
  }
}

WalkParams params(WalkStrategy s, std::size_t gamma, std::size_t length, std::uint64_t seed = 1) {
  WalkParams p;
  p.strategy = s;
  p.walks_per_node = gamma;
  p.walk_length = length;
  p.seed = seed;
  return p;
}

}  // namespace

TEST(DominatingSet, StarPicksCenter) {
  const auto g = star(4);
  EXPECT_EQ(ids(g, greedy_dominating_set(g)), (std::vector<std::string>{"c"}));
}

TEST(DominatingSet, PathFivePicksSecondAndFourth) {
  const auto g = path5();
  const auto d = greedy_dominating_set(g);
  EXPECT_EQ(ids(g, d), (std::vector<std::string>{"v2", "v4"}));
  EXPECT_EQ(testkit::brute_force_domination_number(g), 2u);
}

TEST(DominatingSet, CompleteGraphPicksLowestIndex) {
  const auto g = complete(4);
  EXPECT_EQ(ids(g, greedy_dominating_set(g)), (std::vector<std::string>{"v1"}));
}

TEST(DominatingSet, IsolatedNodesAlwaysMembers) {
  GraphBuilder b;
  b.add_edge("a", "b");
  b.add_node("x");
  b.add_node("y");
  const auto g = std::move(b).build();
  const auto d = greedy_dominating_set(g);
  EXPECT_TRUE(d.contains(g.index_of("x")));
  EXPECT_TRUE(d.contains(g.index_of("y")));
  EXPECT_EQ(d.size(), 3u);
}

TEST(DominatingSet, ValidAndWithinLogBoundOnSmallGraphs) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::size_t> size(1, 12);
  std::uniform_real_distribution<double> prob(0.05, 0.6);
  for (int trial = 0; trial < 60; ++trial) {
    const auto n = size(rng);
    const auto g = testkit::random_graph(n, prob(rng), rng);
    const auto d = greedy_dominating_set(g);
    ASSERT_TRUE(is_dominating(g, d.members));
    const double bound = (1.0 + std::log(static_cast<double>(n))) *
                         static_cast<double>(testkit::brute_force_domination_number(g));
    EXPECT_LE(static_cast<double>(d.size()), bound + 1e-12);
  }
}

TEST(DominatingSet, EmptyGraphRejected) { EXPECT_THROW(greedy_dominating_set(ExpertGraph{}), ValidationError); }

TEST(DominatingSet, IsDominatingDetectsGaps) {
  const auto g = path5();
  const std::vector<NodeIndex> bad{0};
  EXPECT_FALSE(is_dominating(g, bad));
}

TEST(AliasSampler, FrequenciesConverge) {
  const std::vector<double> w{1.0, 2.0, 0.0, 5.0};
  AliasSampler s(w);
  std::mt19937_64 rng(2);
  std::vector<double> counts(w.size(), 0.0);
  const int draws = 200000;
  for (int i = 0; i < draws; ++i) counts[s(rng)] += 1.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    EXPECT_NEAR(counts[i] / draws, w[i] / 8.0, 0.005);
    EXPECT_DOUBLE_EQ(s.probability(i), w[i] / 8.0);
  }
}

TEST(Node2vecTransition, TrianglePlusPendant) {
  const auto g = testkit::graph_from_edges({{"a", "b"}, {"b", "c"}, {"a", "c"}, {"b", "d"}});
  const auto probs = node2vec_transition(g, g.index_of("a"), g.index_of("b"), 2.0, 0.5);
  std::map<std::string, double> by_id;
  const auto nbrs = g.neighbors(g.index_of("b"));
  for (std::size_t i = 0; i < nbrs.size(); ++i) by_id[g.node_id(nbrs[i].node)] = probs[i];
  EXPECT_NEAR(by_id["a"], 1.0 / 7.0, 1e-15);
  EXPECT_NEAR(by_id["c"], 2.0 / 7.0, 1e-15);
  EXPECT_NEAR(by_id["d"], 4.0 / 7.0, 1e-15);
}

TEST(Node2vecTransition, UnitBiasReducesToDeepWalk) {
  std::mt19937_64 rng(8);
  const auto g = testkit::random_graph(25, 0.3, rng, true);
  for (NodeIndex curr = 0; curr < g.num_nodes(); ++curr) {
    const auto dw = deepwalk_transition(g, curr);
    double sum = 0.0;
    for (const auto& prev : g.neighbors(curr)) {
      const auto n2v = node2vec_transition(g, prev.node, curr, 1.0, 1.0);
      ASSERT_EQ(n2v.size(), dw.size());
      sum = 0.0;
      for (std::size_t i = 0; i < dw.size(); ++i) {
        EXPECT_NEAR(n2v[i], dw[i], 1e-12);
        sum += n2v[i];
      }
      EXPECT_NEAR(sum, 1.0, 1e-12);
    }
  }
}

TEST(Node2vecTransition, ForcedReturnAndErrors) {
  const auto g = testkit::graph_from_edges({{"a", "b"}});
  const auto probs = node2vec_transition(g, 0, 1, 3.0, 0.2);
  ASSERT_EQ(probs.size(), 1u);
  EXPECT_DOUBLE_EQ(probs[0], 1.0);
  EXPECT_THROW(node2vec_transition(g, 0, 1, 0.0, 1.0), ValidationError);
  EXPECT_THROW(node2vec_transition(g, 0, 1, 1.0, -1.0), ValidationError);
  const auto p3 = path5();
  EXPECT_THROW(node2vec_transition(p3, 0, 2, 1.0, 1.0), ValidationError);
}

TEST(DeepWalk, K2IsForced) {
  const auto g = testkit::graph_from_edges({{"a", "b"}});
  const auto c = walks_deepwalk(g, params(WalkStrategy::DeepWalk, 1, 3));
  ASSERT_EQ(c.walks.size(), 2u);
  std::vector<std::string> first;
  for (auto v : c.walks[0]) first.push_back(c.tokens[v]);
  EXPECT_EQ(first, (std::vector<std::string>{"a", "b", "a"}));
}

TEST(DeepWalk, CountsAndPaths) {
  std::mt19937_64 rng(4);
  GraphBuilder b;
  for (int i = 0; i < 30; ++i) b.add_edge("v" + std::to_string(i), "v" + std::to_string((i + 1) % 30));
  const auto g = std::move(b).build();
  const auto c = walks_deepwalk(g, params(WalkStrategy::DeepWalk, 10, 15));
  EXPECT_EQ(c.walks.size(), 10u * 30u);
  expect_walks_are_paths(g, c);
  std::vector<int> starts(g.num_nodes(), 0);
  for (const auto& w : c.walks) {
    ++starts[w.front()];
    EXPECT_EQ(w.size(), 15u);
  }
  for (int s : starts) EXPECT_EQ(s, 10);
}

TEST(DeepWalk, IsolatedNodeWalksAreSingletons) {
  GraphBuilder b;
  b.add_edge("a", "b");
  b.add_node("x");
  const auto g = std::move(b).build();
  const auto c = walks_deepwalk(g, params(WalkStrategy::DeepWalk, 2, 5));
  for (const auto& w : c.walks) {
    if (w.front() == g.index_of("x")) EXPECT_EQ(w.size(), 1u);
  }
}

TEST(DeepWalk, UnweightedModeIgnoresWeights) {
  GraphBuilder b;
  b.add_edge("c", "heavy", 100.0);
  b.add_edge("c", "light", 1.0);
  const auto g = std::move(b).build();
  const auto probs = deepwalk_transition(g, g.index_of("c"), false);
  EXPECT_DOUBLE_EQ(probs[0], 0.5);
  EXPECT_DOUBLE_EQ(probs[1], 0.5);
}

TEST(Node2vec, K2IsForcedForAnyBias) {
  const auto g = testkit::graph_from_edges({{"a", "b"}});
  auto p = params(WalkStrategy::Node2vec, 1, 4);
  p.p = 0.3;
  p.q = 7.0;
  const auto c = walks_node2vec(g, p);
  std::vector<std::string> first;
  for (auto v : c.walks[0]) first.push_back(c.tokens[v]);
  EXPECT_EQ(first, (std::vector<std::string>{"a", "b", "a", "b"}));
}

TEST(Node2vec, DeterministicAndThreadIndependent) {
  std::mt19937_64 rng(6);
  const auto g = testkit::random_graph(60, 0.1, rng, true);
  auto p = params(WalkStrategy::Node2vec, 4, 20, 77);
  p.p = 0.5;
  p.q = 2.0;
  const auto a = format_corpus(walks_node2vec(g, p));
  p.threads = 4;
  const auto b = format_corpus(walks_node2vec(g, p));
  EXPECT_EQ(a, b);
  p.seed = 78;
  EXPECT_NE(a, format_corpus(walks_node2vec(g, p)));
}

TEST(Node2vec, EmpiricalSecondStepMatchesTransition) {
  const auto g = testkit::graph_from_edges({{"a", "b"}, {"b", "c"}, {"a", "c"}, {"b", "d"}});
  auto p = params(WalkStrategy::Node2vec, 20000, 3, 3);
  p.p = 2.0;
  p.q = 0.5;
  const auto c = walks_node2vec(g, p);
  const auto a = g.index_of("a"), b = g.index_of("b");
  std::map<NodeIndex, double> counts;
  double total = 0.0;
  for (const auto& w : c.walks) {
    if (w.size() == 3 && w[0] == a && w[1] == b) {
      counts[w[2]] += 1.0;
      total += 1.0;
    }
  }
  ASSERT_GT(total, 1000.0);
  EXPECT_NEAR(counts[a] / total, 1.0 / 7.0, 0.02);
  EXPECT_NEAR(counts[g.index_of("c")] / total, 2.0 / 7.0, 0.02);
  EXPECT_NEAR(counts[g.index_of("d")] / total, 4.0 / 7.0, 0.02);
}

TEST(ExEm, StarWalksHaveCenterLeafCenterShape) {
  const auto g = star(3);
  const auto d = greedy_dominating_set(g);
  const auto c = walks_exem(g, d, params(WalkStrategy::ExEm, 5, 3));
  ASSERT_EQ(c.walks.size(), 5u);
  for (const auto& w : c.walks) {
    ASSERT_EQ(w.size(), 3u);
    EXPECT_EQ(w[0], g.index_of("c"));
    EXPECT_NE(w[1], g.index_of("c"));
    EXPECT_EQ(w[2], g.index_of("c"));
  }
  EXPECT_EQ(c.retry_exhausted, 0u);
}

TEST(ExEm, PathFiveWalksSatisfyRule) {
  const auto g = path5();
  const auto d = greedy_dominating_set(g);
  const auto c = walks_exem(g, d, params(WalkStrategy::ExEm, 10, 3));
  for (const auto& w : c.walks) {
    EXPECT_TRUE(d.contains(w.front()));
    int occ = 0;
    for (auto v : w) occ += d.contains(v);
    EXPECT_GE(occ, 2);
  }
  EXPECT_EQ(c.retry_exhausted, 0u);
  // The specific walk [v2, v3, v4] is admissible.
  const std::vector<NodeIndex> sample{g.index_of("v2"), g.index_of("v3"), g.index_of("v4")};
  int occ = 0;
  for (auto v : sample) occ += d.contains(v);
  EXPECT_EQ(occ, 2);
}

TEST(ExEm, LengthOneExhaustsEveryWalk) {
  const auto g = path5();
  const auto c = walks_exem(g, greedy_dominating_set(g), params(WalkStrategy::ExEm, 3, 1));
  EXPECT_EQ(c.retry_exhausted, c.walks.size());
  EXPECT_EQ(c.walks.size(), 6u);
}

TEST(ExEm, CounterIsExactUnderTightRetries) {
  std::mt19937_64 rng(12);
  const auto g = testkit::random_graph(40, 0.08, rng);
  const auto d = greedy_dominating_set(g);
  auto p = params(WalkStrategy::ExEm, 5, 2);
  p.max_retries = 0;
  const auto c = walks_exem(g, d, p);
  std::size_t failing = 0;
  for (const auto& w : c.walks) {
    int occ = 0;
    for (auto v : w) occ += d.contains(v);
    failing += occ < 2;
  }
  EXPECT_EQ(c.retry_exhausted, failing);
  expect_walks_are_paths(g, c);
}

TEST(ExEm, StartFromAllFlag) {
  const auto g = path5();
  auto p = params(WalkStrategy::ExEm, 2, 4);
  p.exem_start_from_all = true;
  const auto c = walks_exem(g, greedy_dominating_set(g), p);
  EXPECT_EQ(c.walks.size(), 10u);
}

TEST(ExEm, EmptyDominatingSetRejected) {
  const auto g = path5();
  EXPECT_THROW(walks_exem(g, make_dominating_set(g, {}), params(WalkStrategy::ExEm, 1, 5)), ValidationError);
}

TEST(Corpus, RoundTripPreservesWalksAndHeader) {
  std::mt19937_64 rng(1);
  const auto g = testkit::random_graph(20, 0.3, rng);
  auto p = params(WalkStrategy::ExEm, 3, 12, 5);
  const auto c = generate_walks(g, p);
  const auto text = format_corpus(c, {"config_hash=abc"});
  const auto back = parse_corpus(text);
  ASSERT_EQ(back.walks.size(), c.walks.size());
  for (std::size_t i = 0; i < c.walks.size(); ++i) {
    ASSERT_EQ(back.walks[i].size(), c.walks[i].size());
    for (std::size_t j = 0; j < c.walks[i].size(); ++j) {
      EXPECT_EQ(back.tokens[back.walks[i][j]], c.tokens[c.walks[i][j]]);
    }
  }
  EXPECT_EQ(back.params.strategy, WalkStrategy::ExEm);
  EXPECT_EQ(back.params.walk_length, 12u);
  EXPECT_EQ(back.params.seed, 5u);
  EXPECT_EQ(back.retry_exhausted, c.retry_exhausted);
}

TEST(WalkParams, Validation) {
  auto p = params(WalkStrategy::DeepWalk, 0, 5);
  EXPECT_THROW(p.validate(), ValidationError);
  p = params(WalkStrategy::DeepWalk, 1, 0);
  EXPECT_THROW(p.validate(), ValidationError);
  EXPECT_THROW(parse_walk_strategy("levy"), ValidationError);
}
