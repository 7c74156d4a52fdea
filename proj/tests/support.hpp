#pragma once

// Test-side oracles shared by the unit and acceptance suites.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "xrec/fusion.hpp"
#include "xrec/graph.hpp"

namespace xrec::testkit {

/// Erdos-Renyi graph on n nodes named v0..v{n-1}; every node is declared,
/// so isolated nodes are kept.
inline ExpertGraph random_graph(std::size_t n, double p, std::mt19937_64& rng, bool random_weights = false) {
  GraphBuilder b;
  for (std::size_t i = 0; i < n; ++i) b.add_node("v" + std::to_string(i));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (u(rng) < p) {
        b.add_edge(static_cast<NodeIndex>(i), static_cast<NodeIndex>(j), random_weights ? 0.5 + 2.0 * u(rng) : 1.0);
      }
    }
  }
  return std::move(b).build();
}

inline ExpertGraph graph_from_edges(const std::vector<std::pair<std::string, std::string>>& edges) {
  GraphBuilder b;
  for (const auto& [u, v] : edges) b.add_edge(u, v);
  return std::move(b).build();
}

/// Size of a minimum dominating set by exhaustive search (n <= ~16).
inline std::size_t brute_force_domination_number(const ExpertGraph& g) {
  const std::size_t n = g.num_nodes();
  std::vector<std::uint32_t> closed(n);
  for (std::size_t v = 0; v < n; ++v) {
    closed[v] = 1u << v;
    for (const auto& nb : g.neighbors(static_cast<NodeIndex>(v))) closed[v] |= 1u << nb.node;
  }
  const std::uint32_t all = n == 32 ? ~0u : (1u << n) - 1u;
  std::size_t best = n;
  for (std::uint32_t mask = 0; mask <= all; ++mask) {
    const auto size = static_cast<std::size_t>(__builtin_popcount(mask));
    if (size >= best) continue;
    std::uint32_t covered = 0;
    for (std::size_t v = 0; v < n; ++v) {
      if (mask >> v & 1u) covered |= closed[v];
    }
    if (covered == all) best = size;
  }
  return best;
}

/// Central-difference gradient of f at x.
inline Eigen::VectorXd numeric_gradient(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd x,
                                        double eps = 1e-5) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double keep = x(i);
    x(i) = keep + eps;
    const double up = f(x);
    x(i) = keep - eps;
    const double down = f(x);
    x(i) = keep;
    g(i) = (up - down) / (2.0 * eps);
  }
  return g;
}

/// max_i |a_i - n_i| / max(|a_i|, |n_i|, floor). The floor keeps entries whose
/// true value is zero from turning finite-difference round-off into a large ratio.
inline double max_relative_error(const Eigen::VectorXd& analytic, const Eigen::VectorXd& numeric,
                                 double floor = 1e-6) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < analytic.size(); ++i) {
    const double denom = std::max({std::abs(analytic(i)), std::abs(numeric(i)), floor});
    worst = std::max(worst, std::abs(analytic(i) - numeric(i)) / denom);
  }
  return worst;
}

/// Small exact fractions for metric oracles.
struct Rational {
  long long num = 0, den = 1;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

inline Rational reduced(long long num, long long den) {
  if (den == 0) return {};
  const long long g = std::gcd(num, den);
  return g ? Rational{num / g, den / g} : Rational{num, den};
}

inline Rational operator+(Rational a, Rational b) { return reduced(a.num * b.den + b.num * a.den, a.den * b.den); }
inline Rational operator*(Rational a, Rational b) { return reduced(a.num * b.num, a.den * b.den); }

/// 2PR/(P+R), or 0 when P+R = 0.
inline Rational f1_oracle(Rational p, Rational r) {
  const Rational s = p + r;
  if (s.num == 0) return {};
  return Rational{2, 1} * p * r * Rational{s.den, s.num};
}

inline Eigen::VectorXd flatten(const FusionParams<double>& p) {
  Eigen::Index n = 0;
  for (std::size_t l = 0; l < 4; ++l) n += p.weights[l].size() + p.biases[l].size();
  Eigen::VectorXd out(n);
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < 4; ++l) {
    out.segment(at, p.weights[l].size()) = p.weights[l].reshaped();
    at += p.weights[l].size();
    out.segment(at, p.biases[l].size()) = p.biases[l];
    at += p.biases[l].size();
  }
  return out;
}

inline void unflatten(const Eigen::VectorXd& v, FusionParams<double>& p) {
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < 4; ++l) {
    p.weights[l].reshaped() = v.segment(at, p.weights[l].size());
    at += p.weights[l].size();
    p.biases[l] = v.segment(at, p.biases[l].size());
    at += p.biases[l].size();
  }
}

}  // namespace xrec::testkit
