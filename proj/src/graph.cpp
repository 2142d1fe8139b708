#include "jtsmc/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "jtsmc/errors.hpp"

namespace jtsmc {

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[std::max(a, b)] = std::min(a, b);
    return true;
  }
};

Edge ordered(int a, int b) { return a < b ? Edge{a, b} : Edge{b, a}; }

// Earlier-numbered neighbours of every node under the MCS order.
std::vector<NodeSet> earlier_neighbours(const LabeledGraph& g, const std::vector<int>& order) {
  std::vector<NodeSet> m(g.n);
  NodeSet seen;
  for (int v : order) {
    m[v] = g.adj[v] & seen;
    seen = seen.with(v);
  }
  return m;
}

}  // namespace

LabeledGraph::LabeledGraph(int nodes, const std::vector<std::pair<int, int>>& edge_list)
    : LabeledGraph(nodes) {
  for (auto [a, b] : edge_list) add_edge(a, b);
}

void LabeledGraph::add_edge(int a, int b) {
  if (a == b || a < 0 || b < 0 || a >= n || b >= n)
    throw ValidationError("invalid edge (" + std::to_string(a + 1) + "," + std::to_string(b + 1) + ")");
  adj[a] = adj[a].with(b);
  adj[b] = adj[b].with(a);
}

int LabeledGraph::edge_count() const {
  int c = 0;
  for (const auto& a : adj) c += a.size();
  return c / 2;
}

std::vector<std::pair<int, int>> LabeledGraph::edges() const {
  std::vector<std::pair<int, int>> out;
  for (int a = 0; a < n; ++a)
    (adj[a] - NodeSet::first_n(a + 1)).for_each([&](int b) { out.emplace_back(a, b); });
  return out;
}

LabeledGraph LabeledGraph::prefix(int m) const {
  LabeledGraph h(m);
  const NodeSet keep = NodeSet::first_n(m);
  for (int v = 0; v < m; ++v) h.adj[v] = adj[v] & keep;
  return h;
}

LabeledGraph LabeledGraph::extended(NodeSet nbhd) const {
  LabeledGraph h = *this;
  h.n += 1;
  h.adj.push_back(nbhd);
  nbhd.for_each([&](int u) { h.adj[u] = h.adj[u].with(n); });
  return h;
}

LabeledGraph LabeledGraph::relabeled(const std::vector<int>& order, int total) const {
  LabeledGraph h(total);
  for (auto [a, b] : edges()) h.add_edge(order[a], order[b]);
  return h;
}

JunctionTree JunctionTree::relabeled(const std::vector<int>& map, int total) const {
  JunctionTree t;
  t.n_nodes = total;
  t.edges = edges;
  for (NodeSet c : cliques) {
    NodeSet d;
    c.for_each([&](int v) { d = d.with(map[v]); });
    t.cliques.push_back(d);
  }
  return t;
}

JunctionTree JunctionTree::canonical() const {
  std::vector<int> idx(cliques.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) { return cliques[a] < cliques[b]; });
  std::vector<int> where(cliques.size());
  JunctionTree c;
  c.n_nodes = n_nodes;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    where[idx[i]] = static_cast<int>(i);
    c.cliques.push_back(cliques[idx[i]]);
  }
  for (auto [a, b] : edges) c.edges.push_back(ordered(where[a], where[b]));
  std::sort(c.edges.begin(), c.edges.end());
  return c;
}

bool JunctionTree::operator<(const JunctionTree& o) const {
  return std::tie(n_nodes, cliques, edges) < std::tie(o.n_nodes, o.cliques, o.edges);
}

std::vector<int> mcs_order(const LabeledGraph& g) {
  std::vector<int> order;
  order.reserve(g.n);
  NodeSet numbered;
  for (int step = 0; step < g.n; ++step) {
    int best = -1, best_w = -1;
    for (int v = 0; v < g.n; ++v) {
      if (numbered.contains(v)) continue;
      const int w = (g.adj[v] & numbered).size();
      if (w > best_w) {
        best = v;
        best_w = w;
      }
    }
    order.push_back(best);
    numbered = numbered.with(best);
  }
  return order;
}

bool is_decomposable(const LabeledGraph& g) {
  const auto order = mcs_order(g);
  const auto m = earlier_neighbours(g, order);
  // Reverse MCS order is a perfect elimination order iff g is chordal.
  for (int v = 0; v < g.n; ++v) {
    bool ok = true;
    m[v].for_each([&](int w) { ok = ok && m[v].without(w).subset_of(g.adj[w]); });
    if (!ok) return false;
  }
  return true;
}

std::vector<NodeSet> maximal_cliques(const LabeledGraph& g) {
  if (!is_decomposable(g)) throw NotDecomposable("graph is not decomposable");
  const auto order = mcs_order(g);
  const auto m = earlier_neighbours(g, order);
  std::vector<NodeSet> cand;
  cand.reserve(g.n);
  for (int v : order) cand.push_back(m[v].with(v));
  std::vector<NodeSet> out;
  for (std::size_t i = 0; i < cand.size(); ++i) {
    bool maximal = true;
    for (std::size_t j = i + 1; j < cand.size() && maximal; ++j)
      if (cand[i].subset_of(cand[j])) maximal = false;
    if (maximal) out.push_back(cand[i]);
  }
  return out;
}

JunctionTree junction_tree_of(const LabeledGraph& g) {
  JunctionTree t;
  t.n_nodes = g.n;
  t.cliques = maximal_cliques(g);
  const int k = t.size();
  std::vector<std::tuple<int, int, int>> cand;
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j) cand.emplace_back(-(t.cliques[i] & t.cliques[j]).size(), i, j);
  std::sort(cand.begin(), cand.end());
  UnionFind uf(k);
  for (auto [w, i, j] : cand)
    if (uf.unite(i, j)) t.edges.emplace_back(i, j);
  return t;
}

JunctionTree quick_junction_tree(const LabeledGraph& g) {
  JunctionTree t;
  t.n_nodes = g.n;
  t.cliques = maximal_cliques(g);
  NodeSet seen = t.size() ? t.cliques[0] : NodeSet{};
  for (int j = 1; j < t.size(); ++j) {
    const NodeSet s = t.cliques[j] & seen;
    int parent = 0;
    while (!s.subset_of(t.cliques[parent])) ++parent;
    t.edges.emplace_back(parent, j);
    seen |= t.cliques[j];
  }
  return t;
}

LabeledGraph graph_of(const JunctionTree& t) {
  LabeledGraph g(t.n_nodes);
  for (NodeSet c : t.cliques) c.for_each([&](int v) { g.adj[v] |= c.without(v); });
  return g;
}

SeparatorMultiset separators_of(const JunctionTree& t) {
  SeparatorMultiset out;
  for (std::size_t e = 0; e < t.edges.size(); ++e) ++out[t.separator(e)];
  return out;
}

bool is_valid_junction_tree(const JunctionTree& t) {
  const int k = t.size();
  if (t.n_nodes < 0 || t.n_nodes > 64) return false;
  if (t.n_nodes == 0) return k == 0 && t.edges.empty();
  if (k == 0 || static_cast<int>(t.edges.size()) != k - 1) return false;
  NodeSet cover;
  for (NodeSet c : t.cliques) {
    if (c.empty() || !c.subset_of(NodeSet::first_n(t.n_nodes))) return false;
    cover |= c;
  }
  if (cover != NodeSet::first_n(t.n_nodes)) return false;
  UnionFind uf(k);
  for (auto [a, b] : t.edges) {
    if (a < 0 || b < 0 || a >= k || b >= k || !uf.unite(a, b)) return false;
  }
  // Junction property: cliques holding v induce a subtree.
  for (int v = 0; v < t.n_nodes; ++v) {
    int nodes = 0, links = 0;
    for (NodeSet c : t.cliques) nodes += c.contains(v);
    for (auto [a, b] : t.edges) links += t.cliques[a].contains(v) && t.cliques[b].contains(v);
    if (links != nodes - 1) return false;
  }
  const LabeledGraph g = graph_of(t);
  if (!is_decomposable(g)) return false;
  auto mine = t.cliques;
  auto theirs = maximal_cliques(g);
  std::sort(mine.begin(), mine.end());
  std::sort(theirs.begin(), theirs.end());
  return mine == theirs;
}

std::vector<std::vector<int>> separator_components(const JunctionTree& t, NodeSet s) {
  const int k = t.size();
  UnionFind uf(k);
  for (std::size_t e = 0; e < t.edges.size(); ++e) {
    auto [a, b] = t.edges[e];
    if (s.subset_of(t.cliques[a]) && s.subset_of(t.cliques[b]) && t.separator(e) != s) uf.unite(a, b);
  }
  std::vector<std::vector<int>> comps;
  std::vector<int> slot(k, -1);
  for (int i = 0; i < k; ++i) {
    if (!s.subset_of(t.cliques[i])) continue;
    const int r = uf.find(i);
    if (slot[r] < 0) {
      slot[r] = static_cast<int>(comps.size());
      comps.emplace_back();
    }
    comps[slot[r]].push_back(i);
  }
  return comps;
}

BigInt linking_count(const std::vector<int>& sizes) {
  if (sizes.size() <= 1) return 1;
  BigInt prod = 1, sum = 0;
  for (int f : sizes) {
    prod *= f;
    sum += f;
  }
  return prod * boost::multiprecision::pow(sum, static_cast<unsigned>(sizes.size() - 2));
}

double log_linking_count(const std::vector<int>& sizes) {
  if (sizes.size() <= 1) return 0.0;
  double lp = 0.0, sum = 0.0;
  for (int f : sizes) {
    lp += std::log(static_cast<double>(f));
    sum += f;
  }
  return lp + static_cast<double>(sizes.size() - 2) * std::log(sum);
}

BigInt nu(const LabeledGraph& g, const JunctionTree& t, NodeSet s) {
  if (graph_of(t) != g) throw ValidationError("junction tree does not represent the graph");
  const auto seps = separators_of(t);
  if (!seps.count(s)) throw UnknownSeparator("separator " + s.str() + " does not occur");
  std::vector<int> sizes;
  for (const auto& c : separator_components(t, s)) sizes.push_back(static_cast<int>(c.size()));
  return linking_count(sizes);
}

BigInt count_junction_trees(const LabeledGraph& g) {
  return linking_structure(g).mu();
}

BigInt LinkingStructure::mu() const {
  BigInt out = 1;
  for (const auto& site : sites) {
    std::vector<int> sizes;
    for (const auto& c : site.components) sizes.push_back(static_cast<int>(c.size()));
    out *= linking_count(sizes);
  }
  return out;
}

SeparatorMultiset LinkingStructure::separators() const {
  SeparatorMultiset out;
  for (const auto& site : sites) out.emplace(site.separator, static_cast<int>(site.components.size()) - 1);
  return out;
}

double LinkingStructure::log_nu_within(NodeSet within) const {
  double s = 0.0;
  for (const auto& site : sites)
    if (site.separator.subset_of(within)) s += site.log_nu;
  return s;
}

LinkingStructure linking_structure(const LabeledGraph& g) {
  const JunctionTree t = quick_junction_tree(g);
  LinkingStructure ls;
  ls.cliques = t.cliques;
  const auto seps = separators_of(t);
  ls.sites.reserve(seps.size());
  for (const auto& [s, mult] : seps) {
    LinkingStructure::Site site;
    site.separator = s;
    site.components = separator_components(t, s);
    site.owner.assign(t.size(), -1);
    std::vector<int> sizes;
    for (std::size_t c = 0; c < site.components.size(); ++c) {
      sizes.push_back(static_cast<int>(site.components[c].size()));
      for (int q : site.components[c]) site.owner[q] = static_cast<int>(c);
    }
    for (int q = 0; q < t.size(); ++q)
      if (site.owner[q] >= 0) site.pooled.push_back(q);
    site.log_nu = log_linking_count(sizes);
    ls.log_mu += site.log_nu;
    ls.sites.push_back(std::move(site));
  }
  return ls;
}

std::vector<LinkDraw> sample_link_draws(const LinkingStructure& ls, Rng& rng) {
  std::vector<LinkDraw> draws(ls.sites.size());
  for (std::size_t i = 0; i < ls.sites.size(); ++i) {
    const auto& site = ls.sites[i];
    const int k = static_cast<int>(site.components.size());
    const int n = static_cast<int>(site.pooled.size());
    for (int j = 0; j < k - 2; ++j) draws[i].sequence.push_back(rng.below(n));
    for (const auto& comp : site.components) draws[i].reps.push_back(rng.below(static_cast<int>(comp.size())));
  }
  return draws;
}

JunctionTree assemble_junction_tree(int n_nodes, const LinkingStructure& ls,
                                    const std::vector<LinkDraw>& draws) {
  JunctionTree t;
  t.n_nodes = n_nodes;
  t.cliques = ls.cliques;
  for (std::size_t i = 0; i < ls.sites.size(); ++i) {
    const auto& site = ls.sites[i];
    const auto& d = draws[i];
    const int k = static_cast<int>(site.components.size());
    auto rep = [&](int c) { return site.components[c][d.reps[c]]; };
    std::vector<int> degree(k, 1);
    for (int x : d.sequence) ++degree[site.owner[site.pooled[x]]];
    for (int x : d.sequence) {
      const int q = site.pooled[x];
      int leaf = 0;
      while (degree[leaf] != 1) ++leaf;
      t.edges.push_back(ordered(rep(leaf), q));
      degree[leaf] = 0;
      --degree[site.owner[q]];
    }
    int u = -1, w = -1;
    for (int c = 0; c < k; ++c) {
      if (degree[c] != 1) continue;
      (u < 0 ? u : w) = c;
    }
    if (w >= 0) t.edges.push_back(ordered(rep(u), rep(w)));
  }
  return t;
}

JunctionTree sample_junction_tree(const LabeledGraph& g, Rng& rng) {
  const auto ls = linking_structure(g);
  return assemble_junction_tree(g.n, ls, sample_link_draws(ls, rng));
}

std::vector<JunctionTree> enumerate_linkings(const LabeledGraph& g, std::size_t limit) {
  const auto ls = linking_structure(g);
  if (ls.mu() > limit) throw TooLarge("graph has more than " + std::to_string(limit) + " junction trees");
  // All draws per site, then their cartesian product.
  std::vector<std::vector<LinkDraw>> per_site;
  for (const auto& site : ls.sites) {
    const int k = static_cast<int>(site.components.size());
    const int n = static_cast<int>(site.pooled.size());
    std::vector<LinkDraw> all{LinkDraw{}};
    for (int j = 0; j < k - 2; ++j) {
      std::vector<LinkDraw> next;
      for (const auto& d : all)
        for (int x = 0; x < n; ++x) {
          next.push_back(d);
          next.back().sequence.push_back(x);
        }
      all.swap(next);
    }
    for (const auto& comp : site.components) {
      std::vector<LinkDraw> next;
      for (const auto& d : all)
        for (int r = 0; r < static_cast<int>(comp.size()); ++r) {
          next.push_back(d);
          next.back().reps.push_back(r);
        }
      all.swap(next);
    }
    per_site.push_back(std::move(all));
  }
  std::vector<JunctionTree> out;
  std::vector<std::size_t> pick(per_site.size(), 0);
  std::vector<LinkDraw> draws(per_site.size());
  while (true) {
    for (std::size_t i = 0; i < per_site.size(); ++i) draws[i] = per_site[i][pick[i]];
    out.push_back(assemble_junction_tree(g.n, ls, draws));
    std::size_t i = 0;
    while (i < pick.size() && ++pick[i] == per_site[i].size()) pick[i++] = 0;
    if (i == pick.size()) break;
  }
  return out;
}

NodeSet created_separator_bound(const LabeledGraph& grown) {
  const int v = grown.n - 1;
  return grown.adj[v].with(v);
}

namespace {

void check_extension(const LabeledGraph& g_m, const LabeledGraph& g_next) {
  if (g_next.n != g_m.n + 1 || g_next.prefix(g_m.n) != g_m)
    throw InconsistentExpansion("grown tree does not restrict to the source tree");
}

bool inside_some(NodeSet s, const std::vector<NodeSet>& bounds) {
  return std::any_of(bounds.begin(), bounds.end(), [&](NodeSet b) { return s.subset_of(b); });
}

}  // namespace

BigRational mu_ratio(const JunctionTree& t_m, const JunctionTree& t_next,
                     const std::vector<NodeSet>& new_separators) {
  const LabeledGraph g_m = graph_of(t_m);
  const LabeledGraph g_next = graph_of(t_next);
  check_extension(g_m, g_next);
  BigInt num = 1, den = 1;
  for (const auto& [s, mult] : separators_of(t_m))
    if (inside_some(s, new_separators)) num *= nu(g_m, t_m, s);
  for (const auto& [s, mult] : separators_of(t_next))
    if (inside_some(s, new_separators)) den *= nu(g_next, t_next, s);
  return BigRational(num, den);
}

double log_mu_ratio(const LinkingStructure& old_ls, const LinkingStructure& new_ls,
                    const std::vector<NodeSet>& new_separators) {
  double s = 0.0;
  for (const auto& site : old_ls.sites)
    if (inside_some(site.separator, new_separators)) s += site.log_nu;
  for (const auto& site : new_ls.sites)
    if (inside_some(site.separator, new_separators)) s -= site.log_nu;
  return s;
}

CliqueSepDelta clique_sep_symmetric_diff(const std::vector<NodeSet>& cliques_a,
                                         const SeparatorMultiset& seps_a,
                                         const std::vector<NodeSet>& cliques_b,
                                         const SeparatorMultiset& seps_b) {
  CliqueSepDelta d;
  auto a = cliques_a, b = cliques_b;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && a[i] < b[j])) {
      d.cliques.emplace_back(a[i++], -1);
    } else if (i == a.size() || b[j] < a[i]) {
      d.cliques.emplace_back(b[j++], +1);
    } else {
      ++i;
      ++j;
    }
  }
  auto ia = seps_a.begin();
  auto ib = seps_b.begin();
  while (ia != seps_a.end() || ib != seps_b.end()) {
    if (ib == seps_b.end() || (ia != seps_a.end() && ia->first < ib->first)) {
      d.separators.emplace_back(ia->first, -ia->second);
      ++ia;
    } else if (ia == seps_a.end() || ib->first < ia->first) {
      d.separators.emplace_back(ib->first, ib->second);
      ++ib;
    } else {
      if (ib->second != ia->second) d.separators.emplace_back(ia->first, ib->second - ia->second);
      ++ia;
      ++ib;
    }
  }
  return d;
}

CliqueSepDelta clique_sep_symmetric_diff(const JunctionTree& a, const JunctionTree& b) {
  return clique_sep_symmetric_diff(a.cliques, separators_of(a), b.cliques, separators_of(b));
}

}  // namespace jtsmc
