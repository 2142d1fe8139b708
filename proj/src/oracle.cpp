#include "jtsmc/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "jtsmc/detail/expansion_moves.hpp"
#include "jtsmc/errors.hpp"

namespace jtsmc {

namespace {

int pair_index(int p, int a, int b) {
  // Pairs (0,1),(0,2),...,(0,p-1),(1,2),...
  return a * p - a * (a + 1) / 2 + (b - a - 1);
}

// Maximal cliques by subset search; independent of the MCS route.
std::vector<NodeSet> brute_force_cliques(const LabeledGraph& g) {
  std::vector<NodeSet> complete;
  for (std::uint64_t s = 1; s < (std::uint64_t{1} << g.n); ++s) {
    const NodeSet c(s);
    bool ok = true;
    c.for_each([&](int v) { ok = ok && c.without(v).subset_of(g.adj[v]); });
    if (ok) complete.push_back(c);
  }
  std::vector<NodeSet> out;
  for (NodeSet c : complete) {
    bool maximal = true;
    for (NodeSet d : complete)
      if (c != d && c.subset_of(d)) maximal = false;
    if (maximal) out.push_back(c);
  }
  return out;
}

}  // namespace

std::uint64_t edge_key(const LabeledGraph& g) {
  std::uint64_t key = 0;
  for (auto [a, b] : g.edges()) key |= std::uint64_t{1} << pair_index(g.n, a, b);
  return key;
}

LabeledGraph graph_from_key(int p, std::uint64_t key) {
  LabeledGraph g(p);
  for (int a = 0; a < p; ++a)
    for (int b = a + 1; b < p; ++b)
      if ((key >> pair_index(p, a, b)) & 1u) g.add_edge(a, b);
  return g;
}

bool brute_force_chordal(const LabeledGraph& g) {
  for (std::uint64_t s = 0; s < (std::uint64_t{1} << g.n); ++s) {
    const NodeSet sub(s);
    if (sub.size() < 4) continue;
    bool cycle = true;
    sub.for_each([&](int v) { cycle = cycle && (g.adj[v] & sub).size() == 2; });
    if (!cycle) continue;
    // A 2-regular induced subgraph is a cycle iff it is connected.
    NodeSet reach = NodeSet::single(sub.first()), frontier = reach;
    while (!frontier.empty()) {
      NodeSet next;
      frontier.for_each([&](int v) { next |= g.adj[v] & sub; });
      frontier = next - reach;
      reach |= next;
    }
    if (reach == sub) return false;
  }
  return true;
}

std::vector<LabeledGraph> enumerate_decomposable(int p, bool allow_seven) {
  if (p < 1) throw ValidationError("p must be positive");
  if (p > 7 || (p == 7 && !allow_seven)) throw TooLarge("exhaustive enumeration is limited to p <= 6");
  const int pairs = p * (p - 1) / 2;
  std::vector<LabeledGraph> out;
  for (std::uint64_t key = 0; key < (std::uint64_t{1} << pairs); ++key) {
    LabeledGraph g = graph_from_key(p, key);
    if (is_decomposable(g)) out.push_back(std::move(g));
  }
  return out;
}

double ExactPosterior::probability_of(const LabeledGraph& g) const {
  auto it = index.find(edge_key(g));
  return it == index.end() ? 0.0 : probability[it->second];
}

std::vector<std::vector<double>> ExactPosterior::edge_marginals() const {
  std::vector<std::vector<double>> m(p, std::vector<double>(p, 0.0));
  for (std::size_t i = 0; i < graphs.size(); ++i)
    for (auto [a, b] : graphs[i].edges()) {
      m[a][b] += probability[i];
      m[b][a] += probability[i];
    }
  return m;
}

std::vector<std::size_t> ExactPosterior::ranking() const {
  std::vector<std::size_t> idx(graphs.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return probability[a] > probability[b]; });
  return idx;
}

double ExactPosterior::tree_probability(const JunctionTree& t) const {
  const LabeledGraph g = graph_of(t);
  return probability_of(g) / count_junction_trees(g).convert_to<double>();
}

ExactPosterior exact_posterior(const ScoreModel& model, int p, bool allow_seven) {
  if (model.p() != p) throw DimensionMismatch("model size differs from p");
  ExactPosterior post;
  post.p = p;
  post.graphs = enumerate_decomposable(p, allow_seven);
  post.log_gamma.reserve(post.graphs.size());
  for (const auto& g : post.graphs) post.log_gamma.push_back(log_gamma_graph(model, g));
  const double top = *std::max_element(post.log_gamma.begin(), post.log_gamma.end());
  double sum = 0.0;
  for (double lg : post.log_gamma) sum += std::exp(lg - top);
  post.log_normaliser = top + std::log(sum);
  for (std::size_t i = 0; i < post.graphs.size(); ++i) {
    post.probability.push_back(std::exp(post.log_gamma[i] - post.log_normaliser));
    post.index.emplace(edge_key(post.graphs[i]), i);
  }
  return post;
}

std::vector<JunctionTree> enumerate_junction_trees(const LabeledGraph& g) {
  if (g.n > 6) throw TooLarge("brute-force junction tree enumeration needs <= 6 nodes");
  if (!brute_force_chordal(g)) throw NotDecomposable("graph is not decomposable");
  auto cliques = brute_force_cliques(g);
  std::sort(cliques.begin(), cliques.end());
  const int k = static_cast<int>(cliques.size());
  std::vector<Edge> all;
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j) all.emplace_back(i, j);
  std::vector<JunctionTree> out;
  if (k == 1) {
    out.push_back(JunctionTree{g.n, cliques, {}});
    return out;
  }
  // Every (k-1)-subset of candidate edges, via a selection mask.
  std::vector<char> pick(all.size(), 0);
  std::fill(pick.begin(), pick.begin() + (k - 1), 1);
  do {
    JunctionTree t{g.n, cliques, {}};
    for (std::size_t e = 0; e < all.size(); ++e)
      if (pick[e]) t.edges.push_back(all[e]);
    std::vector<int> comp(k);
    std::iota(comp.begin(), comp.end(), 0);
    bool tree = true;
    for (auto [a, b] : t.edges) {
      const int ca = comp[a], cb = comp[b];
      if (ca == cb) {
        tree = false;
        break;
      }
      for (int& c : comp)
        if (c == cb) c = ca;
    }
    if (!tree) continue;
    // Junction property via path checks between every pair of cliques.
    bool junction = true;
    std::vector<std::vector<int>> nb(k);
    for (auto [a, b] : t.edges) {
      nb[a].push_back(b);
      nb[b].push_back(a);
    }
    for (int s = 0; s < k && junction; ++s) {
      std::vector<int> parent(k, -1);
      std::vector<int> stack{s};
      parent[s] = s;
      while (!stack.empty()) {
        const int x = stack.back();
        stack.pop_back();
        for (int y : nb[x])
          if (parent[y] < 0) {
            parent[y] = x;
            stack.push_back(y);
          }
      }
      for (int d = s + 1; d < k && junction; ++d) {
        const NodeSet shared = cliques[s] & cliques[d];
        for (int x = d; x != s; x = parent[x])
          if (!shared.subset_of(cliques[x])) junction = false;
      }
    }
    if (junction) out.push_back(t);
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return out;
}

std::vector<JunctionTree> exact_expansion_support(const JunctionTree& t, int max_nodes) {
  if (t.n_nodes > max_nodes || t.n_nodes > 5) throw TooLarge("expansion support oracle needs a small tree");
  const LabeledGraph g = graph_of(t);
  std::vector<JunctionTree> out;
  for (std::uint64_t s = 0; s < (std::uint64_t{1} << g.n); ++s) {
    const LabeledGraph grown = g.extended(NodeSet(s));
    if (!brute_force_chordal(grown)) continue;
    for (auto& jt : enumerate_junction_trees(grown)) out.push_back(std::move(jt));
  }
  return out;
}

namespace {

// Chooser that replays a recorded decision prefix and takes the first
// branch beyond it, so successive runs walk the whole decision tree.
class ExhaustiveChooser {
public:
  struct Decision {
    std::uint64_t value;
    std::uint64_t arity;
    double prob;  // probability of `value`
  };

  explicit ExhaustiveChooser(std::vector<Decision>& path) : path_(path) {}

  double probability() const {
    double p = 1.0;
    for (const auto& d : path_) p *= d.prob;
    return p;
  }

  bool bernoulli(double p) {
    const auto& d = next(2, [p](std::uint64_t v) { return v ? p : 1.0 - p; });
    return d.value == 1;
  }
  int below(int n) {
    return static_cast<int>(next(n, [n](std::uint64_t) { return 1.0 / n; }).value);
  }
  NodeSet subset(NodeSet s) {
    const std::uint64_t n = std::uint64_t{1} << s.size();
    return s.scatter(next(n, [n](std::uint64_t) { return 1.0 / static_cast<double>(n); }).value);
  }
  NodeSet nonempty_subset(NodeSet s) {
    const std::uint64_t n = (std::uint64_t{1} << s.size()) - 1;
    return s.scatter(1 + next(n, [n](std::uint64_t) { return 1.0 / static_cast<double>(n); }).value);
  }

  // Advances the path to the next unexplored branch; false when done.
  static bool advance(std::vector<Decision>& path, const std::vector<std::function<double(std::uint64_t)>>& laws) {
    while (!path.empty()) {
      auto& d = path.back();
      if (d.value + 1 < d.arity) {
        ++d.value;
        d.prob = laws[path.size() - 1](d.value);
        return true;
      }
      path.pop_back();
    }
    return false;
  }

  std::vector<std::function<double(std::uint64_t)>> laws;

private:
  template <class Law>
  const Decision& next(std::uint64_t arity, Law law) {
    if (cursor_ == path_.size()) path_.push_back({0, arity, law(0)});
    if (laws.size() <= cursor_) laws.resize(cursor_ + 1);
    laws[cursor_] = law;
    return path_[cursor_++];
  }

  std::vector<Decision>& path_;
  std::size_t cursor_ = 0;
};

}  // namespace

std::map<NodeSet, double> enumerate_neighbourhood_law(const JunctionTree& t, const ExpanderConfig& cfg) {
  const TreeLayout layout = tree_layout(t);
  std::map<NodeSet, double> law;
  std::vector<ExhaustiveChooser::Decision> path;
  while (true) {
    ExhaustiveChooser ch(path);
    ExpansionMove move;
    detail::draw_expansion_move(t, layout, cfg, ch, move);
    const double p = ch.probability();
    if (p > 0.0) law[move.neighbourhood()] += p;
    if (!ExhaustiveChooser::advance(path, ch.laws)) break;
  }
  return law;
}

}  // namespace jtsmc
