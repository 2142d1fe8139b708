#include "doctest.h"
#include "helpers.hpp"

#include <functional>

#include "jtsmc/errors.hpp"
#include "jtsmc/kernels.hpp"
#include "jtsmc/oracle.hpp"

using namespace jtsmc;

namespace {

// Every junction tree of every decomposable graph on m nodes.
std::vector<JunctionTree> all_trees(int m) {
  std::vector<JunctionTree> out;
  for (const auto& g : enumerate_decomposable(m))
    for (auto& t : enumerate_junction_trees(g)) out.push_back(std::move(t));
  return out;
}

const std::vector<ExpanderConfig> kConfigs{{0.5, 0.5}, {0.2, 0.8}, {0.8, 0.3}};

}  // namespace

TEST_CASE("order_step_density examples") {
  const OrderKernelConfig wide{6, 15};
  const NodeOrder v{{2}};
  for (int j : {0, 1, 3, 4, 5}) CHECK(order_step_density(v, j, wide) == doctest::Approx(0.2));
  CHECK(order_step_density(v, 2, wide) == 0.0);
  const OrderKernelConfig narrow{6, 1};
  CHECK(order_step_density(v, 1, narrow) == doctest::Approx(0.5));
  CHECK(order_step_density(v, 3, narrow) == doctest::Approx(0.5));
  for (int j : {0, 4, 5}) CHECK(order_step_density(v, j, narrow) == 0.0);
  CHECK_THROWS_AS((OrderKernelConfig{6, 0}.validate()), ValidationError);
}

TEST_CASE("order kernel rows sum to one for every partial order at p <= 8") {
  for (int p = 1; p <= 8; p += (p < 4 ? 1 : 4)) {
    for (int delta = 1; delta <= p; delta += (p > 4 ? 3 : 1)) {
      const OrderKernelConfig cfg{p, delta};
      std::function<void(NodeOrder&)> walk = [&](NodeOrder& v) {
        if (v.size() == p) return;
        double s = 0.0;
        for (int j = 0; j < p; ++j) s += order_step_density(v, j, cfg);
        REQUIRE(s == doctest::Approx(1.0).epsilon(1e-12));
        for (int j = 0; j < p; ++j) {
          if (order_step_density(v, j, cfg) == 0.0) continue;
          v.labels.push_back(j);
          walk(v);
          v.labels.pop_back();
        }
      };
      NodeOrder root;
      walk(root);
    }
  }
}

TEST_CASE("sampled order steps follow the density") {
  const OrderKernelConfig cfg{8, 2};
  const NodeOrder v{{3, 4}};
  Rng rng(3);
  std::vector<double> counts(8, 0.0);
  for (int i = 0; i < 20000; ++i) counts[sample_order_step(v, cfg, rng)] += 1.0;
  std::vector<double> obs, probs;
  for (int j = 0; j < 8; ++j) {
    const double q = order_step_density(v, j, cfg);
    if (q == 0.0) {
      CHECK(counts[j] == 0.0);
      continue;
    }
    obs.push_back(counts[j]);
    probs.push_back(q);
  }
  CHECK(testing::chi2_stat(obs, probs) < testing::chi2_critical(static_cast<int>(obs.size()) - 1));
}

TEST_CASE("expander config bounds are open") {
  CHECK_THROWS_AS((ExpanderConfig{0.0, 0.5}.validate()), ValidationError);
  CHECK_THROWS_AS((ExpanderConfig{0.5, 1.0}.validate()), ValidationError);
  CHECK_NOTHROW((ExpanderConfig{0.5, 0.5}.validate()));
}

TEST_CASE("expand from a single node reaches both two-node graphs") {
  const auto t1 = testing::single_node();
  Rng rng(1);
  bool saw_empty = false, saw_edge = false;
  for (int i = 0; i < 200; ++i) {
    const auto ex = expand(t1, {0.5, 0.5}, rng);
    REQUIRE(is_valid_junction_tree(ex.tree));
    const auto g = graph_of(ex.tree);
    (g.edge_count() ? saw_edge : saw_empty) = true;
  }
  CHECK(saw_empty);
  CHECK(saw_edge);
  const auto iso = junction_tree_of(LabeledGraph(2));
  const auto edge = junction_tree_of(LabeledGraph(2, {{0, 1}}));
  CHECK(expand_density(t1, iso, {0.5, 0.3}) == doctest::Approx(0.3));
  CHECK(expand_density(t1, iso, {0.5, 0.3}) + expand_density(t1, edge, {0.5, 0.3}) == doctest::Approx(1.0));
}

TEST_CASE("isolation branch attaches a singleton clique through an empty separator") {
  const JunctionTree k3{3, {NodeSet::first_n(3)}, {}};
  Rng rng(9);
  int isolated = 0;
  for (int i = 0; i < 100; ++i) {
    const auto ex = expand(k3, {0.5, 0.5}, rng);
    if (!ex.move.isolated) continue;
    ++isolated;
    REQUIRE(ex.tree.size() == 2);
    REQUIRE(ex.tree.edges.size() == 1);
    CHECK(ex.tree.separator(0).empty());
    CHECK(std::count(ex.tree.cliques.begin(), ex.tree.cliques.end(), NodeSet::single(3)) == 1);
  }
  CHECK(isolated > 0);
}

TEST_CASE("expansions are valid, restrict correctly and replay exactly") {
  Rng pick(2024);
  for (int trial = 0; trial < 10000; ++trial) {
    const int m = 1 + pick.below(9);
    const auto g = testing::random_decomposable(m, pick);
    Rng tree_rng(trial);
    const auto t = sample_junction_tree(g, tree_rng);
    const ExpanderConfig cfg{0.1 + 0.8 * pick.uniform(), 0.1 + 0.8 * pick.uniform()};
    Rng rng(static_cast<std::uint64_t>(trial) * 7919u);
    const auto ex = expand(t, cfg, rng);
    const auto grown = graph_of(ex.tree);
    REQUIRE(is_valid_junction_tree(ex.tree));
    REQUIRE(is_decomposable(grown));
    REQUIRE(grown.prefix(m) == g);
    REQUIRE(grown.adj[m] == ex.neighbourhood);
    REQUIRE(replay(t, ex.move) == ex.tree);
    REQUIRE(std::isfinite(ex.log_density));
  }
}

TEST_CASE("sum-product neighbourhood density equals exhaustive move enumeration") {
  for (int m = 1; m <= 4; ++m)
    for (const auto& t : all_trees(m))
      for (const auto& cfg : kConfigs) {
        const auto law = enumerate_neighbourhood_law(t, cfg);
        double total = 0.0;
        for (const auto& [nbhd, prob] : law) {
          total += prob;
          REQUIRE(neighbourhood_probability(t, nbhd, cfg) == doctest::Approx(prob).epsilon(1e-12).scale(0.0));
        }
        REQUIRE(total == doctest::Approx(1.0).epsilon(1e-12));
        // Sets the enumeration never produces must get zero density.
        for (std::uint64_t s = 0; s < (std::uint64_t{1} << m); ++s)
          if (!law.count(NodeSet(s))) REQUIRE(neighbourhood_probability(t, NodeSet(s), cfg) == 0.0);
      }
}

TEST_CASE("expander support equals the exact one-node extension set") {
  for (int m = 1; m <= 4; ++m)
    for (const auto& t : all_trees(m))
      for (const auto& cfg : kConfigs) {
        const auto support = exact_expansion_support(t);
        REQUIRE(!support.empty());
        double total = 0.0;
        for (const auto& t2 : support) {
          const double d = expand_density(t, t2, cfg);
          REQUIRE(d > 0.0);
          total += d;
        }
        REQUIRE(total == doctest::Approx(1.0).epsilon(1e-9));
      }
}

TEST_CASE("every junction tree on up to four nodes is reachable from some smaller tree") {
  for (int m = 1; m <= 3; ++m) {
    const auto sources = all_trees(m);
    for (const auto& t2 : all_trees(m + 1)) {
      bool reached = false;
      for (const auto& t : sources) {
        if (graph_of(t) != graph_of(t2).prefix(m)) continue;
        if (expand_density(t, t2, kConfigs[0]) > 0.0) reached = true;
      }
      REQUIRE(reached);
    }
  }
}

TEST_CASE("collapse support equals the positive-density predecessors") {
  for (int m = 1; m <= 3; ++m) {
    const auto sources = all_trees(m);
    for (const auto& t2 : all_trees(m + 1)) {
      std::vector<JunctionTree> brute;
      for (const auto& t : sources) {
        if (graph_of(t) != graph_of(t2).prefix(m)) continue;
        if (expand_density(t, t2, kConfigs[1]) > 0.0) brute.push_back(t);
      }
      const auto support = collapse_support(t2);
      for (const auto& t : support) REQUIRE(expand_density(t, t2, kConfigs[1]) > 0.0);
      REQUIRE(testing::canonical_set(support) == testing::canonical_set(brute));
      double mass = 0.0;
      for (const auto& t : support) mass += backward_density(t2, t);
      REQUIRE(mass == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("expand_density rejects trees that do not extend the source") {
  const JunctionTree k2{2, {NodeSet::of({0, 1})}, {}};
  const auto e3 = junction_tree_of(LabeledGraph(3));
  CHECK_THROWS_AS(expand_density(k2, e3, kConfigs[0]), InconsistentExpansion);
}

TEST_CASE("collapse support examples") {
  const auto grown = junction_tree_of(LabeledGraph(3, {{0, 1}}));
  auto support = collapse_support(grown);
  REQUIRE(support.size() == 1);
  CHECK(graph_of(support[0]) == LabeledGraph(2, {{0, 1}}));

  const JunctionTree edge{2, {NodeSet::of({0, 1})}, {}};
  support = collapse_support(edge);
  REQUIRE(support.size() == 1);
  CHECK(support[0] == testing::single_node());
  Rng rng(4);
  CHECK(backward_sample(edge, rng) == testing::single_node());
  CHECK(backward_density(edge, testing::single_node()) == 1.0);
}

TEST_CASE("backward samples are uniform over the collapse support") {
  // Removing node 5 from a star leaves four isolated nodes: 16 trees.
  const auto t2 = junction_tree_of(LabeledGraph(5, {{0, 4}, {1, 4}, {2, 4}, {3, 4}}));
  const auto support = testing::canonical_set(collapse_support(t2));
  REQUIRE(support.size() == 16);
  std::vector<double> counts(support.size(), 0.0);
  Rng rng(8);
  for (int i = 0; i < 100000; ++i) {
    const auto t = backward_sample(t2, rng).canonical();
    auto it = std::lower_bound(support.begin(), support.end(), t);
    REQUIRE(it != support.end());
    REQUIRE(*it == t);
    counts[it - support.begin()] += 1.0;
    if (i < 100) REQUIRE(backward_density(t2, t) == doctest::Approx(1.0 / 16));
  }
  CHECK(testing::chi2_stat(counts, std::vector<double>(16, 1.0 / 16)) < testing::chi2_critical(15));
}

TEST_CASE("reachability and collapse counts agree with enumeration on sparse graphs") {
  Rng rng(21);
  int strict = 0;
  for (int rep = 0; rep < 1500; ++rep) {
    const int m = 5 + rep % 5;
    const auto g = testing::random_attached_decomposable(m, rng);
    if (count_junction_trees(g) > 5000) continue;
    const NodeSet nbhd = testing::random_spread_neighbourhood(g, rng);
    if (nbhd.empty()) continue;
    std::size_t reaching = 0;
    const auto trees = enumerate_linkings(g);
    for (const auto& t : trees) {
      const bool reached = reaches_neighbourhood(t, nbhd);
      REQUIRE(reached == (neighbourhood_probability(t, nbhd, kConfigs[2]) > 0.0));
      reaching += reached;
    }
    REQUIRE(reaching >= 1);
    REQUIRE(std::exp(log_collapse_count(linking_structure(g), nbhd)) ==
            doctest::Approx(static_cast<double>(reaching)).epsilon(1e-9));
    strict += reaching < trees.size();
  }
  CHECK(strict >= 20);
}

TEST_CASE("collapse support drops junction trees that block the neighbourhood") {
  // Cliques {1,2,3}, {1,3,5}, {1,4}. Node 6 joins 1, 2 and 4; hanging {1,4}
  // off {1,3,5} puts separator {1,3} between 2 and 4.
  const auto g = testing::edges_1based(5, {{1, 2}, {1, 3}, {1, 4}, {1, 5}, {2, 3}, {3, 5}});
  const NodeSet nbhd = NodeSet::of({0, 1, 3});
  const auto grown = junction_tree_of(g.extended(nbhd));
  REQUIRE(count_junction_trees(g) == 2);
  const auto support = collapse_support(grown);
  REQUIRE(support.size() == 1);
  const auto& kept = support[0];
  const int with4 = static_cast<int>(std::find(kept.cliques.begin(), kept.cliques.end(), NodeSet::of({0, 3})) -
                                     kept.cliques.begin());
  const int with2 = static_cast<int>(std::find(kept.cliques.begin(), kept.cliques.end(), NodeSet::of({0, 1, 2})) -
                                     kept.cliques.begin());
  CHECK(std::find(kept.edges.begin(), kept.edges.end(), Edge{std::min(with2, with4), std::max(with2, with4)}) !=
        kept.edges.end());
  CHECK(backward_density(grown, kept) == 1.0);
  for (const auto& t : enumerate_linkings(g))
    if (!t.same_as(kept)) CHECK(backward_density(grown, t) == 0.0);
  CHECK(log_collapse_count(linking_structure(g), nbhd) == doctest::Approx(0.0));
}

TEST_CASE("backward samples are uniform over a restricted collapse support") {
  // Three of the eight junction trees of this graph reach {2,4,6,7}.
  const auto g = testing::edges_1based(7, {{1, 2}, {1, 3}, {1, 4}, {2, 3}, {2, 4}, {2, 6}, {2, 7}, {4, 5}});
  const auto grown = junction_tree_of(g.extended(NodeSet::of({1, 3, 5, 6})));
  REQUIRE(count_junction_trees(g) == 8);
  const auto support = testing::canonical_set(collapse_support(grown));
  REQUIRE(support.size() == 3);
  std::vector<double> counts(support.size(), 0.0);
  Rng rng(5);
  for (int i = 0; i < 100000; ++i) {
    const auto t = backward_sample(grown, rng).canonical();
    auto it = std::lower_bound(support.begin(), support.end(), t);
    REQUIRE(it != support.end());
    REQUIRE(*it == t);
    counts[it - support.begin()] += 1.0;
  }
  for (const auto& t : support) CHECK(backward_density(grown, t) == doctest::Approx(1.0 / 3));
  CHECK(testing::chi2_stat(counts, std::vector<double>(3, 1.0 / 3)) < testing::chi2_critical(2));
}

TEST_CASE("expand_density matches sampled frequencies at p = 4") {
  // Path 1-2-3: a tree with two cliques and a non-trivial neighbourhood law.
  const auto t = junction_tree_of(LabeledGraph(3, {{0, 1}, {1, 2}}));
  const ExpanderConfig cfg{0.6, 0.35};
  const auto support = testing::canonical_set(exact_expansion_support(t));
  std::vector<double> counts(support.size(), 0.0);
  Rng rng(99);
  const int draws = 1000000;
  for (int i = 0; i < draws; ++i) {
    const auto t2 = expand(t, cfg, rng).tree.canonical();
    auto it = std::lower_bound(support.begin(), support.end(), t2);
    REQUIRE(it != support.end());
    counts[it - support.begin()] += 1.0;
  }
  for (std::size_t i = 0; i < support.size(); ++i) {
    const double p = expand_density(t, support[i], cfg);
    const double se = std::sqrt(p * (1 - p) / draws);
    CHECK(std::abs(counts[i] / draws - p) <= 4 * se);
  }
}
