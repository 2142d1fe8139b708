#pragma once

#include <cmath>
#include <map>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "jtsmc/graph.hpp"
#include "jtsmc/oracle.hpp"
#include "jtsmc/rng.hpp"

namespace testing {

inline jtsmc::LabeledGraph random_decomposable(int p, jtsmc::Rng& rng) {
  while (true) {
    jtsmc::LabeledGraph g(p);
    const double density = rng.uniform();
    for (int a = 0; a < p; ++a)
      for (int b = a + 1; b < p; ++b)
        if (rng.uniform() < density) g.add_edge(a, b);
    if (jtsmc::brute_force_chordal(g)) return g;
  }
}

// Sparse decomposable graph grown by attaching each node to a random subset
// of an existing maximal clique; gives nested separators and many junction
// trees.
inline jtsmc::LabeledGraph random_attached_decomposable(int p, jtsmc::Rng& rng) {
  jtsmc::LabeledGraph g(1);
  for (int i = 1; i < p; ++i) {
    const auto cliques = jtsmc::maximal_cliques(g);
    const auto members = cliques[rng.below(static_cast<int>(cliques.size()))].members();
    jtsmc::NodeSet nb;
    const int draws = rng.below(static_cast<int>(members.size()) + 1) + (rng.uniform() < 0.5);
    for (int j = 0; j < draws; ++j) nb = nb.with(members[rng.below(static_cast<int>(members.size()))]);
    g = g.extended(nb);
  }
  return g;
}

// A neighbourhood spread over a few maximal cliques that keeps g decomposable
// when added; empty if none was found.
inline jtsmc::NodeSet random_spread_neighbourhood(const jtsmc::LabeledGraph& g, jtsmc::Rng& rng) {
  const auto cliques = jtsmc::maximal_cliques(g);
  for (int tries = 0; tries < 50; ++tries) {
    jtsmc::NodeSet pool, nbhd;
    const int picks = 2 + rng.below(3);
    for (int j = 0; j < picks; ++j) pool |= cliques[rng.below(static_cast<int>(cliques.size()))];
    for (int v : pool.members())
      if (rng.uniform() < 0.7) nbhd = nbhd.with(v);
    if (!nbhd.empty() && jtsmc::is_decomposable(g.extended(nbhd))) return nbhd;
  }
  return {};
}

inline std::vector<jtsmc::JunctionTree> canonical_set(std::vector<jtsmc::JunctionTree> ts) {
  for (auto& t : ts) t = t.canonical();
  std::sort(ts.begin(), ts.end());
  return ts;
}

// Upper 1% point of chi-square with `dof` degrees of freedom.
inline double chi2_critical(int dof, double level = 0.01) {
  return boost::math::quantile(boost::math::complement(boost::math::chi_squared(dof), level));
}

// Pearson statistic of observed counts against expected probabilities.
inline double chi2_stat(const std::vector<double>& counts, const std::vector<double>& probs) {
  double n = 0.0;
  for (double c : counts) n += c;
  double s = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double e = n * probs[i];
    s += (counts[i] - e) * (counts[i] - e) / e;
  }
  return s;
}

inline jtsmc::LabeledGraph edges_1based(int p, std::initializer_list<std::pair<int, int>> edges) {
  jtsmc::LabeledGraph g(p);
  for (auto [a, b] : edges) g.add_edge(a - 1, b - 1);
  return g;
}

// Top five Czech autoworkers graphs with exact posterior probabilities
// (pseudo count total 1, uniform graph prior).
inline std::vector<std::pair<jtsmc::LabeledGraph, double>> czech_top_five() {
  return {{edges_1based(6, {{1, 3}, {1, 5}, {2, 3}, {3, 5}, {4, 5}}), 0.248},
          {edges_1based(6, {{1, 3}, {1, 4}, {1, 5}, {2, 3}, {3, 5}, {4, 5}}), 0.104},
          {edges_1based(6, {{1, 3}, {1, 4}, {1, 5}, {2, 3}, {3, 5}}), 0.101},
          {edges_1based(6, {{1, 3}, {2, 3}, {2, 5}, {4, 5}}), 0.059},
          {edges_1based(6, {{1, 3}, {1, 5}, {2, 3}, {2, 6}, {3, 5}, {4, 5}}), 0.051}};
}

inline jtsmc::JunctionTree single_node() { return jtsmc::JunctionTree{1, {jtsmc::NodeSet::single(0)}, {}}; }

}  // namespace testing
