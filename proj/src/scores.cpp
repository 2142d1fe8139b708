#include "jtsmc/scores.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <shared_mutex>
#include <sstream>
#include <unordered_map>

#include "jtsmc/errors.hpp"
#include "jtsmc/simd.hpp"

namespace jtsmc {

namespace {

constexpr int kDenseCacheMaxP = 22;

class SubsetCache {
public:
  explicit SubsetCache(int p) {
    if (p <= kDenseCacheMaxP) {
      dense_ = std::make_unique<std::atomic<double>[]>(std::size_t{1} << p);
      for (std::size_t i = 0; i < (std::size_t{1} << p); ++i)
        dense_[i].store(std::numeric_limits<double>::quiet_NaN(), std::memory_order_relaxed);
    }
  }

  template <class F>
  double get(NodeSet s, F&& compute) const {
    if (dense_) {
      auto& slot = dense_[s.bits()];
      double v = slot.load(std::memory_order_relaxed);
      if (std::isnan(v)) {
        v = compute();
        slot.store(v, std::memory_order_relaxed);
      }
      return v;
    }
    {
      std::shared_lock lock(mutex_);
      auto it = sparse_.find(s);
      if (it != sparse_.end()) return it->second;
    }
    const double v = compute();
    std::unique_lock lock(mutex_);
    sparse_.emplace(s, v);
    return v;
  }

private:
  std::unique_ptr<std::atomic<double>[]> dense_;
  mutable std::shared_mutex mutex_;
  mutable std::unordered_map<NodeSet, double> sparse_;
};

}  // namespace

double log_multigamma(int q, double a) {
  double s = 0.25 * q * (q - 1) * std::log(std::numbers::pi);
  for (int j = 1; j <= q; ++j) s += std::lgamma(a + 0.5 * (1 - j));
  return s;
}

std::vector<double> dirichlet_pseudo_counts(const std::vector<int>& cardinality, double total, NodeSet q) {
  std::size_t cells = 1;
  q.for_each([&](int v) { cells *= static_cast<std::size_t>(cardinality.at(v)); });
  return std::vector<double>(cells, total / static_cast<double>(cells));
}

void DiscreteData::validate() const {
  if (cardinality.size() != columns.size()) throw DimensionMismatch("cardinality count differs from column count");
  if (!names.empty() && names.size() != columns.size()) throw DimensionMismatch("name count differs from column count");
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (columns[j].size() != columns[0].size()) throw DimensionMismatch("ragged data columns");
    if (cardinality[j] < 1) throw DimensionMismatch("cardinality must be positive");
    for (auto x : columns[j])
      if (x >= static_cast<std::uint32_t>(cardinality[j]))
        throw DimensionMismatch("value out of range in column " + std::to_string(j + 1));
  }
}

struct ScoreModel::Impl {
  int p = 0;
  Likelihood kind = Likelihood::none;
  int cap = 0;

  // Dirichlet-multinomial.
  DiscreteData discrete;
  double lambda = 1.0;

  // Gauss-Wishart.
  int n_obs = 0;
  double dof = 1.0;
  Eigen::MatrixXd scale;
  Eigen::MatrixXd gram;

  std::shared_ptr<SubsetCache> cache;

  double likelihood_term(NodeSet q) const {
    switch (kind) {
      case Likelihood::none:
        return 0.0;
      case Likelihood::dirichlet_multinomial:
        return dirichlet_term(q);
      case Likelihood::gauss_wishart:
        return wishart_term(q);
    }
    return 0.0;
  }

  double dirichlet_term(NodeSet q) const {
    if (q.empty()) return 0.0;
    const std::size_t n = static_cast<std::size_t>(discrete.n());
    long double cells = 1;
    q.for_each([&](int v) { cells *= discrete.cardinality[v]; });
    const double a = lambda / static_cast<double>(cells);
    double s = 0.0;
    auto add_cell = [&](std::uint64_t c) {
      if (c) s += std::lgamma(a + static_cast<double>(c)) - std::lgamma(a);
    };
    if (cells < 4294967296.0L) {
      std::vector<std::uint32_t> keys(n, 0);
      std::uint32_t stride = 1;
      q.for_each([&](int v) {
        simd::accumulate_keys(keys.data(), discrete.columns[v].data(), stride, n);
        stride *= static_cast<std::uint32_t>(discrete.cardinality[v]);
      });
      if (cells <= static_cast<long double>(std::max<std::size_t>(4 * n, 1u << 16))) {
        std::vector<std::uint32_t> counts(static_cast<std::size_t>(cells), 0);
        for (auto k : keys) ++counts[k];
        for (auto c : counts) add_cell(c);
      } else {
        std::sort(keys.begin(), keys.end());
        for (std::size_t i = 0; i < n;) {
          std::size_t j = i;
          while (j < n && keys[j] == keys[i]) ++j;
          add_cell(j - i);
          i = j;
        }
      }
    } else {
      // Cell keys as tuples; only reached for very wide cliques.
      std::vector<std::vector<std::uint32_t>> rows(n);
      const auto members = q.members();
      for (std::size_t i = 0; i < n; ++i)
        for (int v : members) rows[i].push_back(discrete.columns[v][i]);
      std::sort(rows.begin(), rows.end());
      for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && rows[j] == rows[i]) ++j;
        add_cell(j - i);
        i = j;
      }
    }
    return s - (std::lgamma(lambda + static_cast<double>(n)) - std::lgamma(lambda));
  }

  double wishart_term(NodeSet q) const {
    const int k = q.size();
    if (k == 0) return 0.0;
    const auto idx = q.members();
    Eigen::MatrixXd phi(k, k), post(k, k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) {
        phi(i, j) = scale(idx[i], idx[j]);
        post(i, j) = phi(i, j) + gram(idx[i], idx[j]);
      }
    auto logdet = [](const Eigen::MatrixXd& m) {
      Eigen::LLT<Eigen::MatrixXd> llt(m);
      if (llt.info() != Eigen::Success) throw NotPositiveDefinite("scale block is not positive definite");
      return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    };
    const double beta = 0.5 * (dof + k - 1);
    const double alpha = 0.5 * (dof + n_obs + k - 1);
    return -0.5 * n_obs * k * std::log(2.0 * std::numbers::pi) + k * (alpha - beta) * std::log(2.0) +
           log_multigamma(k, alpha) - log_multigamma(k, beta) + beta * logdet(phi) - alpha * logdet(post);
  }
};

ScoreModel ScoreModel::uniform(int p) {
  if (p < 1 || p > 64) throw ValidationError("p must lie in 1..64");
  auto impl = std::make_shared<Impl>();
  impl->p = p;
  impl->cache = std::make_shared<SubsetCache>(p);
  return ScoreModel(impl);
}

ScoreModel ScoreModel::dirichlet(DiscreteData data, double pseudo_count_total) {
  data.validate();
  if (data.p() < 1 || data.p() > 64) throw ValidationError("p must lie in 1..64");
  if (!(pseudo_count_total > 0)) throw ValidationError("pseudo_count_total must be positive");
  auto impl = std::make_shared<Impl>();
  impl->p = data.p();
  impl->kind = Likelihood::dirichlet_multinomial;
  impl->discrete = std::move(data);
  impl->lambda = pseudo_count_total;
  impl->cache = std::make_shared<SubsetCache>(impl->p);
  return ScoreModel(impl);
}

ScoreModel ScoreModel::wishart(ContinuousData data, double dof, Eigen::MatrixXd scale) {
  const int p = data.p();
  if (p < 1 || p > 64) throw ValidationError("p must lie in 1..64");
  if (!(dof > 0)) throw ValidationError("dof must be positive");
  if (scale.rows() != p || scale.cols() != p) throw DimensionMismatch("scale matrix must be p x p");
  if (Eigen::LLT<Eigen::MatrixXd>(scale).info() != Eigen::Success)
    throw NotPositiveDefinite("scale matrix is not positive definite");
  auto impl = std::make_shared<Impl>();
  impl->p = p;
  impl->kind = Likelihood::gauss_wishart;
  impl->n_obs = data.n();
  impl->dof = dof;
  impl->scale = std::move(scale);
  impl->gram.resize(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = i; j < p; ++j) {
      const double s = simd::dot(data.values.col(i).data(), data.values.col(j).data(), data.n());
      impl->gram(i, j) = impl->gram(j, i) = s;
    }
  impl->cache = std::make_shared<SubsetCache>(p);
  return ScoreModel(impl);
}

ScoreModel ScoreModel::with_size_cap(int max_clique) const {
  if (max_clique < 1) throw ValidationError("max_clique must be at least 1");
  auto impl = std::make_shared<Impl>(*impl_);
  impl->cap = max_clique;
  impl->cache = std::make_shared<SubsetCache>(impl->p);
  return ScoreModel(impl);
}

int ScoreModel::p() const { return impl_->p; }
Likelihood ScoreModel::likelihood() const { return impl_->kind; }
int ScoreModel::size_cap() const { return impl_->cap; }

std::string ScoreModel::describe() const {
  std::ostringstream os;
  switch (impl_->kind) {
    case Likelihood::none:
      os << "uniform";
      break;
    case Likelihood::dirichlet_multinomial:
      os << "dirichlet(pseudo_count_total=" << impl_->lambda << ")";
      break;
    case Likelihood::gauss_wishart:
      os << "wishart(dof=" << impl_->dof << ")";
      break;
  }
  if (impl_->cap) os << "+size_cap(" << impl_->cap << ")";
  return os.str();
}

double ScoreModel::log_potential(NodeSet subset) const {
  if (!subset.subset_of(NodeSet::first_n(impl_->p))) throw DimensionMismatch("subset exceeds the variable count");
  if (impl_->cap && subset.size() > impl_->cap) return kStructuralZero;
  return impl_->cache->get(subset, [&] { return impl_->likelihood_term(subset); });
}

ScoreCounters& score_counters() {
  static ScoreCounters counters;
  return counters;
}

namespace {

double clique_sep_sum(const ScoreModel& model, const std::vector<NodeSet>& cliques,
                      const SeparatorMultiset& seps, const NodeOrder& order) {
  double s = 0.0;
  for (NodeSet c : cliques) {
    const double v = model.log_potential(order.to_external(c));
    if (is_structural_zero(v)) return kStructuralZero;
    s += v;
  }
  for (const auto& [sep, mult] : seps) s -= mult * model.log_potential(order.to_external(sep));
  return s;
}

}  // namespace

double log_gamma_graph(const ScoreModel& model, const JunctionTree& t, const NodeOrder& order) {
  if (order.size() != t.n_nodes) throw DimensionMismatch("order length differs from tree size");
  score_counters().full_graph_evaluations.fetch_add(1, std::memory_order_relaxed);
  return clique_sep_sum(model, t.cliques, separators_of(t), order);
}

double log_gamma_graph(const ScoreModel& model, const LabeledGraph& g) {
  if (g.n != model.p()) throw DimensionMismatch("graph size differs from the model");
  NodeOrder identity;
  for (int v = 0; v < g.n; ++v) identity.labels.push_back(v);
  return log_gamma_graph(model, quick_junction_tree(g), identity);
}

double log_gamma_delta(const ScoreModel& model, const CliqueSepDelta& delta, const NodeOrder& order) {
  score_counters().delta_evaluations.fetch_add(1, std::memory_order_relaxed);
  double s = 0.0;
  bool lost = false;
  for (const auto& [c, sign] : delta.cliques) {
    const double v = model.log_potential(order.to_external(c));
    if (is_structural_zero(v)) {
      if (sign > 0) return kStructuralZero;
      lost = true;
      continue;
    }
    s += sign * v;
  }
  if (lost) return std::numeric_limits<double>::infinity();
  for (const auto& [sep, mult] : delta.separators) s -= mult * model.log_potential(order.to_external(sep));
  return s;
}

}  // namespace jtsmc
