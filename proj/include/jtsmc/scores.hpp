#pragma once

#include <atomic>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "jtsmc/graph.hpp"
#include "jtsmc/node_set.hpp"

namespace jtsmc {

// n observations of p categorical variables, stored column-wise.
struct DiscreteData {
  std::vector<std::string> names;
  std::vector<int> cardinality;
  std::vector<std::vector<std::uint32_t>> columns;

  int p() const { return static_cast<int>(columns.size()); }
  int n() const { return columns.empty() ? 0 : static_cast<int>(columns[0].size()); }
  // Throws DimensionMismatch on ragged columns or out-of-range values.
  void validate() const;
};

// n observations of p real variables (rows are observations).
struct ContinuousData {
  std::vector<std::string> names;
  Eigen::MatrixXd values;

  int p() const { return static_cast<int>(values.cols()); }
  int n() const { return static_cast<int>(values.rows()); }
};

enum class Likelihood { none, dirichlet_multinomial, gauss_wishart };

// Log of a structural zero. Sums and differences involving it are handled
// explicitly by the graph-level functions below.
inline constexpr double kStructuralZero = -std::numeric_limits<double>::infinity();
inline bool is_structural_zero(double log_score) { return log_score == kStructuralZero; }

// Clique/separator potential gamma(Q) = prior(Q) * marginal likelihood of the
// data restricted to Q. Immutable apart from an internal subset cache that is
// safe for concurrent use.
class ScoreModel {
public:
  static ScoreModel uniform(int p);
  // Pseudo count lambda_total / |I| per full-table cell, so every marginal
  // table carries lambda_total in total.
  static ScoreModel dirichlet(DiscreteData data, double pseudo_count_total);
  // Wishart prior with `dof` degrees of freedom and scale matrix `scale` on
  // the precision of a zero-mean Gaussian.
  static ScoreModel wishart(ContinuousData data, double dof, Eigen::MatrixXd scale);

  // Structural prior that zeroes every clique with more than max_clique nodes.
  ScoreModel with_size_cap(int max_clique) const;

  int p() const;
  Likelihood likelihood() const;
  int size_cap() const;  // 0 when uncapped
  std::string describe() const;

  // log gamma(subset) over external labels; kStructuralZero when capped.
  double log_potential(NodeSet subset) const;

  struct Impl;

private:
  explicit ScoreModel(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<const Impl> impl_;
};

// Instrumentation. Full-graph evaluations must not happen along SMC paths.
struct ScoreCounters {
  std::atomic<long long> full_graph_evaluations{0};
  std::atomic<long long> delta_evaluations{0};
};
ScoreCounters& score_counters();

// log gamma(g) as clique sum minus separator sum, internal labels mapped
// through `order`.
double log_gamma_graph(const ScoreModel& model, const JunctionTree& t, const NodeOrder& order);
// Same for a graph already on external labels 0..p-1.
double log_gamma_graph(const ScoreModel& model, const LabeledGraph& g);

// log gamma(b) - log gamma(a) from the signed clique/separator differences.
// A structural zero on the b side gives -inf; on the a side only, +inf.
double log_gamma_delta(const ScoreModel& model, const CliqueSepDelta& delta, const NodeOrder& order);

// Dirichlet pseudo counts of the marginal table over q, the first member of
// q varying fastest: total / |I_q| per cell, i.e. the full table's uniform
// counts summed over the variables outside q.
std::vector<double> dirichlet_pseudo_counts(const std::vector<int>& cardinality, double total, NodeSet q);

// log of the multivariate gamma function Gamma_q(a).
double log_multigamma(int q, double a);

}  // namespace jtsmc
