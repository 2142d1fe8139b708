#pragma once

#include <vector>

#include "jtsmc/graph.hpp"
#include "jtsmc/node_set.hpp"
#include "jtsmc/rng.hpp"

namespace jtsmc {

// Node-order kernel: the next external label is uniform over the unvisited
// labels within `bandwidth` of a visited one.
struct OrderKernelConfig {
  int p = 1;
  int bandwidth = 1;
  void validate() const;
};

// Labels the next step may pick; all remaining labels if none is in range.
NodeSet order_candidates(const NodeOrder& v, const OrderKernelConfig& cfg);
double order_step_density(const NodeOrder& v, int j, const OrderKernelConfig& cfg);
int sample_order_step(const NodeOrder& v, const OrderKernelConfig& cfg, Rng& rng);
// log rho_m(v): uniform first label, then the chained step densities.
double log_order_law(const NodeOrder& v, const OrderKernelConfig& cfg);

struct ExpanderConfig {
  double alpha = 0.5;  // subtree growth probability
  double beta = 0.5;   // isolation probability
  void validate() const;
};

// Internal choices of one expansion; replay() rebuilds the grown tree.
struct ExpansionMove {
  bool isolated = false;
  int anchor = -1;
  std::vector<int> components;     // included components, growth order
  std::vector<int> local_anchors;  // one clique per included component
  std::vector<std::pair<int, NodeSet>> chosen;  // clique, its neighbour subset
  std::vector<LinkDraw> links;     // junction-tree draw of the grown graph

  NodeSet neighbourhood() const;
};

struct Expansion {
  JunctionTree tree;
  ExpansionMove move;
  NodeSet neighbourhood;
  LinkingStructure grown;          // linking structure of the grown graph
  double log_neighbourhood = 0.0;  // log P(neighbourhood | source tree)
  double log_density = 0.0;        // log K(source, tree)
};

// Grows t (internal nodes 0..m-1) by node m.
Expansion expand(const JunctionTree& t, const ExpanderConfig& cfg, Rng& rng);
JunctionTree replay(const JunctionTree& t, const ExpansionMove& move);

// Exact probability that the expander gives node m the neighbourhood nbhd.
double neighbourhood_probability(const JunctionTree& t, NodeSet nbhd, const ExpanderConfig& cfg);

// K(t, t_next). Throws InconsistentExpansion if t_next does not extend t.
double expand_density(const JunctionTree& t, const JunctionTree& t_next, const ExpanderConfig& cfg);
double log_expand_density(const JunctionTree& t, const JunctionTree& t_next, const ExpanderConfig& cfg);

// Whether the expander can give a new node the neighbourhood nbhd when it
// grows t: inside each connected component, the cliques joined through
// non-empty separators contained in nbhd must cover that component's share
// of nbhd. The growth probabilities only scale the density.
bool reaches_neighbourhood(const JunctionTree& t, NodeSet nbhd);

// log of the number of junction trees of ls's graph that reach nbhd.
double log_collapse_count(const LinkingStructure& ls, NodeSet nbhd);

// Trees the retrospective kernel may return for t_next: the junction trees
// of t_next's graph without its last node from which the expander reaches
// the last node's neighbourhood.
std::vector<JunctionTree> collapse_support(const JunctionTree& t_next);
JunctionTree backward_sample(const JunctionTree& t_next, Rng& rng);
double backward_density(const JunctionTree& t_next, const JunctionTree& t);

// Component layout of a tree after cutting its empty-separator edges.
struct TreeLayout {
  std::vector<int> component;                    // clique -> component
  std::vector<std::vector<int>> members;         // component -> cliques
  std::vector<std::vector<int>> component_adj;   // component tree
  std::vector<std::vector<int>> clique_adj;      // non-empty-separator neighbours
};
TreeLayout tree_layout(const JunctionTree& t);

}  // namespace jtsmc
