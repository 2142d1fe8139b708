#include "jtsmc/kernels.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "jtsmc/detail/expansion_moves.hpp"
#include "jtsmc/errors.hpp"

namespace jtsmc {

void OrderKernelConfig::validate() const {
  if (p < 1 || p > 64) throw ValidationError("p must lie in 1..64");
  if (bandwidth < 1) throw ValidationError("bandwidth delta must be at least 1");
}

NodeSet order_candidates(const NodeOrder& v, const OrderKernelConfig& cfg) {
  const NodeSet all = NodeSet::first_n(cfg.p);
  const NodeSet seen = v.visited();
  if (seen.empty()) return all;
  std::uint64_t reach = 0;
  const int span = std::min(cfg.bandwidth, 63);
  for (int d = 1; d <= span; ++d) reach |= (seen.bits() << d) | (seen.bits() >> d);
  const NodeSet a = (NodeSet(reach) & all) - seen;
  return a.empty() ? all - seen : a;
}

double order_step_density(const NodeOrder& v, int j, const OrderKernelConfig& cfg) {
  if (j < 0 || j >= cfg.p) return 0.0;
  const NodeSet a = order_candidates(v, cfg);
  return a.contains(j) ? 1.0 / a.size() : 0.0;
}

int sample_order_step(const NodeOrder& v, const OrderKernelConfig& cfg, Rng& rng) {
  const NodeSet a = order_candidates(v, cfg);
  if (a.empty()) throw ValidationError("order is already complete");
  return a.scatter(std::uint64_t{1} << rng.below(a.size())).first();
}

double log_order_law(const NodeOrder& v, const OrderKernelConfig& cfg) {
  double s = 0.0;
  NodeOrder prefix;
  for (int label : v.labels) {
    const double q = order_step_density(prefix, label, cfg);
    if (q == 0.0) return -std::numeric_limits<double>::infinity();
    s += std::log(q);
    prefix.labels.push_back(label);
  }
  return s;
}

void ExpanderConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0,1)");
  if (!(beta > 0.0 && beta < 1.0)) throw ValidationError("beta must lie in (0,1)");
}

NodeSet ExpansionMove::neighbourhood() const {
  NodeSet n;
  for (const auto& [q, s] : chosen) n |= s;
  return n;
}

TreeLayout tree_layout(const JunctionTree& t) {
  const int k = t.size();
  TreeLayout L;
  L.clique_adj.assign(k, {});
  std::vector<int> parent(k);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t e = 0; e < t.edges.size(); ++e) {
    if (t.separator(e).empty()) continue;
    auto [a, b] = t.edges[e];
    L.clique_adj[a].push_back(b);
    L.clique_adj[b].push_back(a);
    const int ra = find(a), rb = find(b);
    parent[std::max(ra, rb)] = std::min(ra, rb);
  }
  for (auto& nb : L.clique_adj) std::sort(nb.begin(), nb.end());
  L.component.assign(k, -1);
  std::vector<int> slot(k, -1);
  for (int i = 0; i < k; ++i) {
    const int r = find(i);
    if (slot[r] < 0) {
      slot[r] = static_cast<int>(L.members.size());
      L.members.emplace_back();
    }
    L.component[i] = slot[r];
    L.members[slot[r]].push_back(i);
  }
  L.component_adj.assign(L.members.size(), {});
  for (std::size_t e = 0; e < t.edges.size(); ++e) {
    if (!t.separator(e).empty()) continue;
    const int ca = L.component[t.edges[e].first], cb = L.component[t.edges[e].second];
    L.component_adj[ca].push_back(cb);
    L.component_adj[cb].push_back(ca);
  }
  for (auto& nb : L.component_adj) std::sort(nb.begin(), nb.end());
  return L;
}

namespace {

JunctionTree build_grown(const JunctionTree& t, NodeSet nbhd, LinkingStructure& ls,
                         const std::vector<LinkDraw>* draws, Rng* rng, std::vector<LinkDraw>* drawn) {
  const LabeledGraph grown = graph_of(t).extended(nbhd);
  ls = linking_structure(grown);
  if (draws) return assemble_junction_tree(grown.n, ls, *draws);
  *drawn = sample_link_draws(ls, *rng);
  return assemble_junction_tree(grown.n, ls, *drawn);
}

}  // namespace

Expansion expand(const JunctionTree& t, const ExpanderConfig& cfg, Rng& rng) {
  Expansion out;
  ExpansionMove& move = out.move;
  detail::draw_expansion_move(t, tree_layout(t), cfg, rng, move);
  out.neighbourhood = move.neighbourhood();
  out.tree = build_grown(t, out.neighbourhood, out.grown, nullptr, &rng, &move.links);
  out.log_neighbourhood = std::log(neighbourhood_probability(t, out.neighbourhood, cfg));
  out.log_density = out.log_neighbourhood - out.grown.log_mu;
  return out;
}

JunctionTree replay(const JunctionTree& t, const ExpansionMove& move) {
  LinkingStructure ls;
  return build_grown(t, move.neighbourhood(), ls, &move.links, nullptr, nullptr);
}

namespace {

// Sum-product evaluation of the expander's neighbourhood law. Given the
// target neighbourhood every chosen clique Q must carry S_Q = Q & nbhd, so
// the only freedom left is which cliques and components are chosen.
class NeighbourhoodDensity {
public:
  NeighbourhoodDensity(const JunctionTree& t, NodeSet nbhd, const ExpanderConfig& cfg)
      : t_(t), L_(tree_layout(t)), n_(nbhd), cfg_(cfg) {}

  double total() {
    const int k = t_.size();
    rooted_.assign(k, 0.0);
    for (int l = 0; l < k; ++l) rooted_[l] = within(l, -1).weight;
    double sum = 0.0;
    for (int a = 0; a < k; ++a) {
      if (!t_.cliques[a].intersects(n_)) continue;
      const int root = L_.component[a];
      double v = rooted_[a] / (std::ldexp(1.0, t_.cliques[a].size()) - 1.0);
      for (int d : L_.component_adj[root]) v *= optional_component(d, root).factor;
      sum += v;
    }
    return (1.0 - cfg_.beta) * sum / k;
  }

private:
  struct Part {
    double weight;
    NodeSet nodes;
  };

  // Weight of growing from q away from `from` within q's component.
  Part within(int q, int from) const {
    Part out{1.0, t_.cliques[q]};
    for (int c : L_.clique_adj[q]) {
      if (c == from) continue;
      const Part sub = within(c, q);
      out.nodes |= sub.nodes;
      const NodeSet r = t_.cliques[q] & t_.cliques[c];
      const bool required = !(sub.nodes & n_).subset_of(r);
      double term = required ? 0.0 : 1.0;
      if (r.subset_of(n_)) {
        term = cfg_.alpha * std::ldexp(sub.weight, -(t_.cliques[c] - r).size());
        if (!required) term += 1.0 - cfg_.alpha;
      }
      out.weight *= term;
    }
    return out;
  }

  struct ComponentPart {
    double factor;  // contribution as a frontier candidate
    bool required;  // the component or something beyond it meets nbhd
  };

  ComponentPart optional_component(int comp, int from) const {
    const auto& members = L_.members[comp];
    double phi = 0.0;
    bool required = false;
    for (int l : members) {
      phi += std::ldexp(rooted_[l], -t_.cliques[l].size());
      required = required || t_.cliques[l].intersects(n_);
    }
    double v = phi / static_cast<double>(members.size());
    for (int d : L_.component_adj[comp]) {
      if (d == from) continue;
      const ComponentPart sub = optional_component(d, comp);
      v *= sub.factor;
      required = required || sub.required;
    }
    return {required ? cfg_.alpha * v : (1.0 - cfg_.alpha) + cfg_.alpha * v, required};
  }

  const JunctionTree& t_;
  TreeLayout L_;
  NodeSet n_;
  ExpanderConfig cfg_;
  std::vector<double> rooted_;
};

}  // namespace

double neighbourhood_probability(const JunctionTree& t, NodeSet nbhd, const ExpanderConfig& cfg) {
  if (nbhd.empty()) return cfg.beta;
  if (!nbhd.subset_of(NodeSet::first_n(t.n_nodes))) return 0.0;
  return NeighbourhoodDensity(t, nbhd, cfg).total();
}

double log_expand_density(const JunctionTree& t, const JunctionTree& t_next, const ExpanderConfig& cfg) {
  const LabeledGraph g = graph_of(t);
  const LabeledGraph grown = graph_of(t_next);
  if (grown.n != g.n + 1 || grown.prefix(g.n) != g)
    throw InconsistentExpansion("grown tree does not restrict to the source tree");
  if (!is_valid_junction_tree(t_next)) return -std::numeric_limits<double>::infinity();
  const double p = neighbourhood_probability(t, grown.adj[g.n], cfg);
  if (p <= 0.0) return -std::numeric_limits<double>::infinity();
  return std::log(p) - linking_structure(grown).log_mu;
}

double expand_density(const JunctionTree& t, const JunctionTree& t_next, const ExpanderConfig& cfg) {
  return std::exp(log_expand_density(t, t_next, cfg));
}

namespace {

int find_root(std::vector<int>& parent, int x) {
  while (parent[x] != x) x = parent[x] = parent[parent[x]];
  return x;
}

// Connected component of the graph, per clique.
std::vector<int> clique_components(const std::vector<NodeSet>& cliques) {
  const int k = static_cast<int>(cliques.size());
  std::vector<int> parent(k);
  std::iota(parent.begin(), parent.end(), 0);
  for (int a = 0; a < k; ++a)
    for (int b = a + 1; b < k; ++b)
      if (cliques[a].intersects(cliques[b])) parent[find_root(parent, b)] = find_root(parent, a);
  for (int a = 0; a < k; ++a) parent[a] = find_root(parent, a);
  return parent;
}

// True when, in every component meeting nbhd, one class of `label` covers
// the component's share of nbhd.
bool classes_cover(const std::vector<NodeSet>& cliques, const std::vector<int>& comp,
                   const std::vector<int>& label, NodeSet nbhd) {
  const int k = static_cast<int>(cliques.size());
  std::vector<NodeSet> share(k), cover(k);
  for (int a = 0; a < k; ++a) {
    share[comp[a]] |= cliques[a] & nbhd;
    cover[label[a]] |= cliques[a] & nbhd;
  }
  for (int h = 0; h < k; ++h) {
    if (share[h].empty()) continue;
    bool ok = false;
    for (int a = 0; a < k && !ok; ++a) ok = comp[a] == h && cover[label[a]] == share[h];
    if (!ok) return false;
  }
  return true;
}

std::vector<int> canonical_labels(const std::vector<int>& label) {
  std::vector<int> map(label.size(), -1), out(label.size());
  int next = 0;
  for (std::size_t a = 0; a < label.size(); ++a) {
    if (map[label[a]] < 0) map[label[a]] = next++;
    out[a] = map[label[a]];
  }
  return out;
}

// Distribution of the partition of cliques into runs joined by separators
// inside nbhd, one site at a time. Within a site component the cliques fall
// into classes of the current partition. A linking edge joins the classes of
// its two end cliques, so the classes a linking merges form parts that hold
// at most one class per component, and the parts glue the components into a
// tree. Each part with class weights w is spanned in
// prod w * (sum w)^(|part|-2) ways (weighted Cayley), and the product over
// parts counts the linkings with that outcome.
class CollapseCounter {
public:
  CollapseCounter(const LinkingStructure& ls, NodeSet nbhd) : ls_(ls), n_(nbhd) {}

  double log_count() {
    const auto& cl = ls_.cliques;
    const int k = static_cast<int>(cl.size());
    comp_ = clique_components(cl);
    std::vector<int> id(k);
    std::iota(id.begin(), id.end(), 0);
    // Covering by a single clique needs no linking at all.
    if (classes_cover(cl, comp_, id, n_)) return ls_.log_mu;
    std::map<std::vector<int>, double> states{{id, 1.0}};
    for (const auto& site : ls_.sites) {
      if (site.separator.empty() || !site.separator.subset_of(n_)) continue;
      std::map<std::vector<int>, double> next;
      for (const auto& [label, prob] : states) advance(site, label, prob, next);
      states.swap(next);
    }
    double good = 0.0;
    for (const auto& [label, prob] : states)
      if (classes_cover(cl, comp_, label, n_)) good += prob;
    return good > 0.0 ? ls_.log_mu + std::log(good) : -std::numeric_limits<double>::infinity();
  }

private:
  struct Vertex {
    int block;
    int cls;
    double weight;
  };

  struct Walk {
    const std::vector<Vertex>* verts;
    int k;
    std::vector<std::vector<int>> parts;  // vertex indices
    std::vector<std::uint64_t> part_blocks;
  };

  void advance(const LinkingStructure::Site& site, const std::vector<int>& label, double prob,
               std::map<std::vector<int>, double>& out) const {
    const int k = static_cast<int>(site.components.size());
    std::vector<Vertex> verts;
    for (int i = 0; i < k; ++i)
      for (int q : site.components[i]) {
        auto it = std::find_if(verts.begin(), verts.end(),
                               [&](const Vertex& v) { return v.block == i && v.cls == label[q]; });
        if (it == verts.end())
          verts.push_back({i, label[q], 1.0});
        else
          it->weight += 1.0;
      }
    Walk w{&verts, k, {}, {}};
    assign(w, 0, label, prob * std::exp(-site.log_nu), out);
  }

  // Blocks reachable from `start` through the parts, skipping part `skip`.
  static std::uint64_t reach(const Walk& w, std::uint64_t start, std::size_t skip) {
    std::uint64_t seen = start;
    bool grew = true;
    while (grew) {
      grew = false;
      for (std::size_t j = 0; j < w.parts.size(); ++j)
        if (j != skip && (w.part_blocks[j] & seen) && (w.part_blocks[j] & ~seen)) {
          seen |= w.part_blocks[j];
          grew = true;
        }
    }
    return seen;
  }

  void assign(Walk& w, std::size_t v, const std::vector<int>& label, double scale,
              std::map<std::vector<int>, double>& out) const {
    const auto& verts = *w.verts;
    if (v == verts.size()) {
      if (reach(w, 1u, w.parts.size()) != (w.k == 64 ? ~0ull : (1ull << w.k) - 1)) return;
      double count = 1.0;
      std::vector<int> merged = label;
      for (const auto& part : w.parts) {
        double sum = 0.0;
        for (int u : part) {
          count *= verts[u].weight;
          sum += verts[u].weight;
        }
        if (part.size() >= 2) count *= std::pow(sum, static_cast<double>(part.size()) - 2.0);
        const int target = verts[part[0]].cls;
        for (int u : part)
          for (int& x : merged)
            if (x == verts[u].cls) x = target;
      }
      out[canonical_labels(merged)] += scale * count;
      return;
    }
    const std::uint64_t bit = 1ull << verts[v].block;
    for (std::size_t j = 0; j < w.parts.size(); ++j) {
      if (w.part_blocks[j] & bit) continue;
      // Joining part j must not close a cycle between blocks.
      if (reach(w, w.part_blocks[j], w.parts.size()) & bit) continue;
      w.parts[j].push_back(static_cast<int>(v));
      w.part_blocks[j] |= bit;
      assign(w, v + 1, label, scale, out);
      w.part_blocks[j] &= ~bit;
      w.parts[j].pop_back();
    }
    w.parts.push_back({static_cast<int>(v)});
    w.part_blocks.push_back(bit);
    assign(w, v + 1, label, scale, out);
    w.parts.pop_back();
    w.part_blocks.pop_back();
  }

  const LinkingStructure& ls_;
  NodeSet n_;
  std::vector<int> comp_;
};

NodeSet last_neighbourhood(const LabeledGraph& grown) { return grown.adj[grown.n - 1]; }

}  // namespace

bool reaches_neighbourhood(const JunctionTree& t, NodeSet nbhd) {
  const int k = t.size();
  std::vector<int> parent(k);
  std::iota(parent.begin(), parent.end(), 0);
  for (std::size_t e = 0; e < t.edges.size(); ++e) {
    const NodeSet r = t.separator(e);
    if (r.empty() || !r.subset_of(nbhd)) continue;
    parent[find_root(parent, t.edges[e].second)] = find_root(parent, t.edges[e].first);
  }
  for (int a = 0; a < k; ++a) parent[a] = find_root(parent, a);
  return classes_cover(t.cliques, clique_components(t.cliques), parent, nbhd);
}

double log_collapse_count(const LinkingStructure& ls, NodeSet nbhd) {
  if (nbhd.empty()) return ls.log_mu;
  return CollapseCounter(ls, nbhd).log_count();
}

std::vector<JunctionTree> collapse_support(const JunctionTree& t_next) {
  const LabeledGraph grown = graph_of(t_next);
  const NodeSet nbhd = last_neighbourhood(grown);
  std::vector<JunctionTree> out;
  for (auto& t : enumerate_linkings(grown.prefix(grown.n - 1)))
    if (reaches_neighbourhood(t, nbhd)) out.push_back(std::move(t));
  return out;
}

JunctionTree backward_sample(const JunctionTree& t_next, Rng& rng) {
  if (t_next.n_nodes < 2) throw EmptySupport("nothing to collapse below one node");
  const LabeledGraph grown = graph_of(t_next);
  const NodeSet nbhd = last_neighbourhood(grown);
  const LabeledGraph g = grown.prefix(grown.n - 1);
  const auto ls = linking_structure(g);
  // Rejection from the uniform law over all junction trees; the support is
  // never empty because t_next itself collapses onto a reaching tree.
  while (true) {
    JunctionTree t = assemble_junction_tree(g.n, ls, sample_link_draws(ls, rng));
    if (reaches_neighbourhood(t, nbhd)) return t;
  }
}

double backward_density(const JunctionTree& t_next, const JunctionTree& t) {
  if (t.n_nodes + 1 != t_next.n_nodes || !is_valid_junction_tree(t)) return 0.0;
  const LabeledGraph grown = graph_of(t_next);
  const LabeledGraph g = grown.prefix(t.n_nodes);
  const NodeSet nbhd = last_neighbourhood(grown);
  if (graph_of(t) != g || !reaches_neighbourhood(t, nbhd)) return 0.0;
  return std::exp(-log_collapse_count(linking_structure(g), nbhd));
}

}  // namespace jtsmc
