#pragma once

#include <map>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "jtsmc/node_set.hpp"
#include "jtsmc/rng.hpp"

namespace jtsmc {

using BigInt = boost::multiprecision::cpp_int;
using BigRational = boost::multiprecision::cpp_rational;

// Undirected simple graph on internal labels 0..n-1.
struct LabeledGraph {
  int n = 0;
  std::vector<NodeSet> adj;

  LabeledGraph() = default;
  explicit LabeledGraph(int nodes) : n(nodes), adj(nodes) {}
  LabeledGraph(int nodes, const std::vector<std::pair<int, int>>& edges);

  void add_edge(int a, int b);
  bool has_edge(int a, int b) const { return adj[a].contains(b); }
  int edge_count() const;
  // Pairs (a, b) with a < b in lexicographic order.
  std::vector<std::pair<int, int>> edges() const;
  // Induced subgraph on nodes 0..m-1.
  LabeledGraph prefix(int m) const;
  // Same graph with one extra node adjacent to nbhd.
  LabeledGraph extended(NodeSet nbhd) const;
  // Graph on `total` nodes in which node v of *this becomes node order[v].
  LabeledGraph relabeled(const std::vector<int>& order, int total) const;

  bool operator==(const LabeledGraph&) const = default;
};

using Edge = std::pair<int, int>;

// Cliques plus a spanning tree over them. Separators are derived per edge.
struct JunctionTree {
  int n_nodes = 0;
  std::vector<NodeSet> cliques;
  std::vector<Edge> edges;  // clique indices, first < second

  NodeSet separator(std::size_t e) const { return cliques[edges[e].first] & cliques[edges[e].second]; }
  int size() const { return static_cast<int>(cliques.size()); }

  // Same tree with cliques sorted and edges re-indexed and sorted; two trees
  // are the same representation iff their canonical forms are equal.
  JunctionTree canonical() const;
  bool same_as(const JunctionTree& o) const { return canonical() == o.canonical(); }
  // Node v becomes map[v]; the result has `total` nodes.
  JunctionTree relabeled(const std::vector<int>& map, int total) const;
  bool operator==(const JunctionTree&) const = default;
  bool operator<(const JunctionTree& o) const;
};

using SeparatorMultiset = std::map<NodeSet, int>;

// Maximum cardinality search visiting order; ties go to the lowest label.
std::vector<int> mcs_order(const LabeledGraph& g);

bool is_decomposable(const LabeledGraph& g);

// Maximal cliques in MCS discovery order. Throws NotDecomposable.
std::vector<NodeSet> maximal_cliques(const LabeledGraph& g);

// Canonical junction tree: cliques in discovery order, tree edges by
// Kruskal on intersection size with lexicographic tie-breaking.
JunctionTree junction_tree_of(const LabeledGraph& g);

// Some junction tree of g, built in O(K^2) by attaching each clique to the
// first earlier clique holding its separator. Cheaper than junction_tree_of.
JunctionTree quick_junction_tree(const LabeledGraph& g);

LabeledGraph graph_of(const JunctionTree& t);

SeparatorMultiset separators_of(const JunctionTree& t);

// Structural check of every JunctionTree invariant.
bool is_valid_junction_tree(const JunctionTree& t);

// The subtrees of t spanned by cliques containing s once every tree edge
// whose separator equals s is cut. Each component lists clique indices in
// increasing order; components are sorted by their first index.
std::vector<std::vector<int>> separator_components(const JunctionTree& t, NodeSet s);

// nu at s from subtree sizes: (prod f)(sum f)^(k-2), 1 when k = 1.
BigInt linking_count(const std::vector<int>& sizes);
double log_linking_count(const std::vector<int>& sizes);

BigInt nu(const LabeledGraph& g, const JunctionTree& t, NodeSet s);

BigInt count_junction_trees(const LabeledGraph& g);

// Per-separator linking structure of a decomposable graph: everything needed
// to count, sample and enumerate its junction trees.
struct LinkingStructure {
  struct Site {
    NodeSet separator;
    std::vector<std::vector<int>> components;
    std::vector<int> owner;   // pooled clique -> component
    std::vector<int> pooled;  // all cliques holding the separator, ascending
    double log_nu = 0.0;
  };
  std::vector<NodeSet> cliques;
  std::vector<Site> sites;  // sorted by separator
  double log_mu = 0.0;

  BigInt mu() const;
  SeparatorMultiset separators() const;
  // log nu summed over the sites whose separator lies inside `within`.
  double log_nu_within(NodeSet within) const;
};

LinkingStructure linking_structure(const LabeledGraph& g);

// One uniform re-linking draw per site: a Pruefer-style sequence over the
// pooled cliques (length k-2) and one representative per component.
struct LinkDraw {
  std::vector<int> sequence;
  std::vector<int> reps;
  bool operator==(const LinkDraw&) const = default;
};

std::vector<LinkDraw> sample_link_draws(const LinkingStructure& ls, Rng& rng);
JunctionTree assemble_junction_tree(int n_nodes, const LinkingStructure& ls,
                                    const std::vector<LinkDraw>& draws);

// Uniform draw from the mu(g) junction trees of g.
JunctionTree sample_junction_tree(const LabeledGraph& g, Rng& rng);

// Every junction tree of g, by enumerating all link draws. Throws TooLarge
// past `limit` trees.
std::vector<JunctionTree> enumerate_linkings(const LabeledGraph& g, std::size_t limit = 1u << 20);

// Closed neighbourhood of the last node of `grown`, the set handed to
// mu_ratio as the separators created by the expansion.
NodeSet created_separator_bound(const LabeledGraph& grown);

// mu(g_m) / mu(g_{m+1}) = prod_{U1} nu_old / prod_{U2} nu_new, where U1, U2
// are the separators of the old and new graphs lying inside some member of
// new_separators. Throws InconsistentExpansion when t_next does not extend t_m.
BigRational mu_ratio(const JunctionTree& t_m, const JunctionTree& t_next,
                     const std::vector<NodeSet>& new_separators);
double log_mu_ratio(const LinkingStructure& old_ls, const LinkingStructure& new_ls,
                    const std::vector<NodeSet>& new_separators);

// Signed symmetric differences: +1 for members of b only, -1 for members of
// a only. Separators are compared as multisets, so an entry may carry a
// multiplicity other than one.
struct CliqueSepDelta {
  std::vector<std::pair<NodeSet, int>> cliques;
  std::vector<std::pair<NodeSet, int>> separators;
  bool empty() const { return cliques.empty() && separators.empty(); }
};

CliqueSepDelta clique_sep_symmetric_diff(const JunctionTree& a, const JunctionTree& b);
CliqueSepDelta clique_sep_symmetric_diff(const std::vector<NodeSet>& cliques_a,
                                         const SeparatorMultiset& seps_a,
                                         const std::vector<NodeSet>& cliques_b,
                                         const SeparatorMultiset& seps_b);

}  // namespace jtsmc
