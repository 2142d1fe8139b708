#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "jtsmc/graph.hpp"
#include "jtsmc/kernels.hpp"
#include "jtsmc/scores.hpp"

namespace jtsmc {

// Bit (index of pair (a,b) in lexicographic order) per edge; a compact graph key.
std::uint64_t edge_key(const LabeledGraph& g);
LabeledGraph graph_from_key(int p, std::uint64_t key);

// Chordality by searching for an induced chordless cycle of length >= 4.
bool brute_force_chordal(const LabeledGraph& g);

// Every decomposable graph on p nodes in increasing edge_key order. p <= 6,
// or p = 7 with allow_seven.
std::vector<LabeledGraph> enumerate_decomposable(int p, bool allow_seven = false);

struct ExactPosterior {
  int p = 0;
  std::vector<LabeledGraph> graphs;
  std::vector<double> log_gamma;
  std::vector<double> probability;
  double log_normaliser = 0.0;  // log of the sum of gamma over all graphs

  double probability_of(const LabeledGraph& g) const;
  // Symmetric p x p matrix of edge inclusion probabilities.
  std::vector<std::vector<double>> edge_marginals() const;
  // Graph indices by decreasing probability (ties by edge_key).
  std::vector<std::size_t> ranking() const;
  // pi(g(t)) / mu(g(t)): the law of a uniformly represented posterior graph.
  double tree_probability(const JunctionTree& t) const;

  std::map<std::uint64_t, std::size_t> index;
};

ExactPosterior exact_posterior(const ScoreModel& model, int p, bool allow_seven = false);

// All spanning trees of the maximal cliques that satisfy the junction
// property, found by brute force over edge subsets. Needs <= 6 nodes.
std::vector<JunctionTree> enumerate_junction_trees(const LabeledGraph& g);

// Every junction tree on m+1 nodes whose graph restricts to g(t); m <= 4.
std::vector<JunctionTree> exact_expansion_support(const JunctionTree& t, int max_nodes = 4);

// Law of the expander's neighbourhood obtained by walking every decision
// path of the move sampler.
std::map<NodeSet, double> enumerate_neighbourhood_law(const JunctionTree& t, const ExpanderConfig& cfg);

}  // namespace jtsmc
