#include "jtsmc/generate.hpp"

#include <algorithm>
#include <numeric>

#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>

#include "jtsmc/errors.hpp"

namespace jtsmc {

LabeledGraph banded_graph(int p, const std::vector<int>& lags, Rng& rng) {
  if (p < 1) throw ValidationError("p must be positive");
  if (lags.empty()) throw ValidationError("need at least one lag");
  for (int l : lags)
    if (l < 1) throw ValidationError("lags must be positive");
  LabeledGraph g(p);
  int prev = 0;
  for (int i = 1; i < p; ++i) {
    const int l = std::min({lags[rng.below(static_cast<int>(lags.size()))], prev + 1, i});
    for (int j = i - l; j < i; ++j) g.add_edge(j, i);
    prev = l;
  }
  return g;
}

void check_positive_definite(const Eigen::MatrixXd& m) {
  if (Eigen::LLT<Eigen::MatrixXd>(m).info() == Eigen::Success) return;
  for (Eigen::Index k = 1; k <= m.rows(); ++k)
    if (Eigen::LLT<Eigen::MatrixXd>(m.topLeftCorner(k, k)).info() != Eigen::Success)
      throw NotPositiveDefinite("leading minor " + std::to_string(k) + " is not positive");
  throw NotPositiveDefinite("matrix is not positive definite");
}

Eigen::MatrixXd verbatim_covariance(const LabeledGraph& g, double rho, double sigma2) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(g.n, g.n) * sigma2;
  for (auto [a, b] : g.edges()) s(a, b) = s(b, a) = rho * sigma2;
  return s;
}

Eigen::MatrixXd completed_covariance(const LabeledGraph& g, double rho, double sigma2) {
  if (!is_decomposable(g)) throw NotDecomposable("covariance completion needs a decomposable graph");
  const Eigen::MatrixXd pattern = verbatim_covariance(g, rho, sigma2);
  const JunctionTree t = junction_tree_of(g);
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(g.n, g.n);
  auto add_inverse = [&](NodeSet s, double sign) {
    const auto idx = s.members();
    const int q = static_cast<int>(idx.size());
    if (q == 0) return;
    Eigen::MatrixXd block(q, q);
    for (int i = 0; i < q; ++i)
      for (int j = 0; j < q; ++j) block(i, j) = pattern(idx[i], idx[j]);
    Eigen::LLT<Eigen::MatrixXd> llt(block);
    if (llt.info() != Eigen::Success)
      throw NotPositiveDefinite("covariance block on " + s.str() + " is not positive definite");
    const Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(q, q));
    for (int i = 0; i < q; ++i)
      for (int j = 0; j < q; ++j) k(idx[i], idx[j]) += sign * inv(i, j);
  };
  for (NodeSet c : t.cliques) add_inverse(c, 1.0);
  for (std::size_t e = 0; e < t.edges.size(); ++e) add_inverse(t.separator(e), -1.0);
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) throw NotPositiveDefinite("completed precision is not positive definite");
  return llt.solve(Eigen::MatrixXd::Identity(g.n, g.n));
}

GaussianSample generate_gaussian(const GaussianSpec& spec) {
  if (spec.n < 1) throw ValidationError("n must be positive");
  if (spec.sigma2 <= 0.0) throw ValidationError("sigma2 must be positive");
  Rng graph_rng = Rng::derive(spec.seed, 1);
  GaussianSample out;
  out.graph = banded_graph(spec.p, spec.lags, graph_rng);
  out.covariance = spec.mode == CovarianceMode::verbatim ? verbatim_covariance(out.graph, spec.rho, spec.sigma2)
                                                         : completed_covariance(out.graph, spec.rho, spec.sigma2);
  check_positive_definite(out.covariance);
  Eigen::LLT<Eigen::MatrixXd> llt(out.covariance);
  out.precision = llt.solve(Eigen::MatrixXd::Identity(spec.p, spec.p));

  const Eigen::MatrixXd pattern = verbatim_covariance(out.graph, spec.rho, spec.sigma2);
  long off = 0, zeros = 0;
  for (int a = 0; a < spec.p; ++a)
    for (int b = 0; b < spec.p; ++b) {
      if (a == b || out.graph.has_edge(a, b)) {
        out.max_pattern_error = std::max(out.max_pattern_error, std::abs(out.covariance(a, b) - pattern(a, b)));
      } else {
        ++off;
        const double v = std::abs(out.precision(a, b));
        out.max_offgraph_precision = std::max(out.max_offgraph_precision, v);
        zeros += v < 1e-9;
      }
    }
  out.offgraph_zero_fraction = off ? static_cast<double>(zeros) / static_cast<double>(off) : 1.0;

  Rng rng = Rng::derive(spec.seed, 2);
  boost::random::normal_distribution<double> z;
  const Eigen::MatrixXd l = llt.matrixL();
  Eigen::MatrixXd draws(spec.p, spec.n);
  for (int i = 0; i < spec.n; ++i)
    for (int j = 0; j < spec.p; ++j) draws(j, i) = z(rng);
  out.data.values = (l * draws).transpose();
  for (int j = 1; j <= spec.p; ++j) out.data.names.push_back("X" + std::to_string(j));
  return out;
}

namespace {

std::vector<double> dirichlet(std::size_t k, double concentration, Rng& rng) {
  boost::random::gamma_distribution<double> gamma(concentration);
  std::vector<double> w(k);
  double s = 0.0;
  for (double& x : w) s += x = gamma(rng);
  if (s == 0.0) {
    // All draws underflowed (tiny concentration): a random vertex.
    w.assign(k, 0.0);
    w[rng.below(static_cast<int>(k))] = 1.0;
    return w;
  }
  for (double& x : w) x /= s;
  return w;
}

std::size_t cells_of(const std::vector<int>& vars, const std::vector<int>& card) {
  std::size_t c = 1;
  for (int v : vars) c *= static_cast<std::size_t>(card[v]);
  return c;
}

}  // namespace

DiscreteModel::DiscreteModel(const LabeledGraph& g, std::vector<int> cardinality, double concentration, Rng& rng)
    : graph_(g), cardinality_(std::move(cardinality)) {
  if (static_cast<int>(cardinality_.size()) != g.n) throw DimensionMismatch("one cardinality per variable");
  for (int c : cardinality_)
    if (c < 1) throw ValidationError("cardinalities must be positive");
  if (concentration <= 0.0) throw ValidationError("concentration must be positive");
  if (!is_decomposable(g)) throw NotDecomposable("discrete generator needs a decomposable graph");
  const JunctionTree t = junction_tree_of(g);
  // Breadth-first from clique 0 so every factor's separator is already drawn.
  std::vector<std::vector<int>> adj(t.cliques.size());
  for (auto [a, b] : t.edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<int> parent(t.cliques.size(), -2), queue{0};
  parent[0] = -1;
  for (std::size_t h = 0; h < queue.size(); ++h)
    for (int nb : adj[queue[h]])
      if (parent[nb] == -2) {
        parent[nb] = queue[h];
        queue.push_back(nb);
      }
  for (int c : queue) {
    const NodeSet sep = parent[c] < 0 ? NodeSet{} : t.cliques[c] & t.cliques[parent[c]];
    Factor f;
    f.given = sep.members();
    f.fresh = (t.cliques[c] - sep).members();
    const std::size_t given_cells = cells_of(f.given, cardinality_);
    const std::size_t fresh_cells = cells_of(f.fresh, cardinality_);
    for (std::size_t s = 0; s < given_cells; ++s) {
      const auto row = dirichlet(fresh_cells, concentration, rng);
      f.table.insert(f.table.end(), row.begin(), row.end());
    }
    factors_.push_back(std::move(f));
  }
}

std::size_t DiscreteModel::config(const std::vector<int>& vars, const std::vector<int>& x) const {
  std::size_t key = 0, stride = 1;
  for (int v : vars) {
    key += static_cast<std::size_t>(x[v]) * stride;
    stride *= static_cast<std::size_t>(cardinality_[v]);
  }
  return key;
}

double DiscreteModel::probability(const std::vector<int>& x) const {
  double pr = 1.0;
  for (const auto& f : factors_)
    pr *= f.table[config(f.given, x) * cells_of(f.fresh, cardinality_) + config(f.fresh, x)];
  return pr;
}

DiscreteData DiscreteModel::sample(int n, Rng& rng) const {
  DiscreteData d;
  d.cardinality = cardinality_;
  d.columns.assign(p(), std::vector<std::uint32_t>(n));
  for (int j = 1; j <= p(); ++j) d.names.push_back("X" + std::to_string(j));
  std::vector<int> x(p(), 0);
  for (int i = 0; i < n; ++i) {
    for (const auto& f : factors_) {
      const std::size_t width = cells_of(f.fresh, cardinality_);
      const double* row = f.table.data() + config(f.given, x) * width;
      double u = rng.uniform(), acc = 0.0;
      std::size_t cell = 0;
      for (; cell + 1 < width; ++cell)
        if ((acc += row[cell]) > u) break;
      for (int v : f.fresh) {
        x[v] = static_cast<int>(cell % cardinality_[v]);
        cell /= cardinality_[v];
      }
    }
    for (int j = 0; j < p(); ++j) d.columns[j][i] = static_cast<std::uint32_t>(x[j]);
  }
  return d;
}

}  // namespace jtsmc
