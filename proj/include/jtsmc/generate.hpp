#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "jtsmc/graph.hpp"
#include "jtsmc/rng.hpp"
#include "jtsmc/scores.hpp"

namespace jtsmc {

// Banded chordal graph: node i links to its l_i predecessors, with l_i drawn
// uniformly from `lags` and capped by l_{i-1} + 1 (which keeps the graph
// chordal) and by i.
LabeledGraph banded_graph(int p, const std::vector<int>& lags, Rng& rng);

enum class CovarianceMode {
  // sigma2 on the diagonal and rho * sigma2 on edges, completed off the graph
  // so that the precision vanishes there.
  completion,
  // The displayed matrix as is: zero covariance off the graph.
  verbatim,
};

struct GaussianSpec {
  int p = 50;
  int n = 100;
  double rho = 0.9;
  double sigma2 = 1.0;
  std::vector<int> lags{1, 2, 3, 4, 5};
  std::uint64_t seed = 1;
  CovarianceMode mode = CovarianceMode::completion;
};

struct GaussianSample {
  LabeledGraph graph;
  Eigen::MatrixXd covariance;
  Eigen::MatrixXd precision;
  ContinuousData data;
  double max_offgraph_precision = 0.0;   // largest |precision| off the graph
  double offgraph_zero_fraction = 0.0;   // off-graph precision entries below 1e-9
  double max_pattern_error = 0.0;        // diagonal/edge covariance vs the spec
};

// Throws NotPositiveDefinite naming the first failing leading minor (1-based).
void check_positive_definite(const Eigen::MatrixXd& m);

Eigen::MatrixXd verbatim_covariance(const LabeledGraph& g, double rho, double sigma2);
// Covariance equal to the pattern on the diagonal and edges whose inverse is
// zero off the graph: sum over cliques of the inverse clique blocks minus the
// same over separators gives the precision.
Eigen::MatrixXd completed_covariance(const LabeledGraph& g, double rho, double sigma2);

GaussianSample generate_gaussian(const GaussianSpec& spec);

// Discrete model Markov to a decomposable graph: a Dirichlet draw for the
// root clique table, then for each further clique a Dirichlet conditional
// table of its new variables given the separator with its parent.
class DiscreteModel {
public:
  DiscreteModel(const LabeledGraph& g, std::vector<int> cardinality, double concentration, Rng& rng);

  const LabeledGraph& graph() const { return graph_; }
  const std::vector<int>& cardinality() const { return cardinality_; }
  int p() const { return graph_.n; }
  double probability(const std::vector<int>& x) const;
  DiscreteData sample(int n, Rng& rng) const;

private:
  struct Factor {
    std::vector<int> given;  // separator variables
    std::vector<int> fresh;  // variables introduced here
    std::vector<double> table;  // [given config][fresh config], fresh fastest
  };
  std::size_t config(const std::vector<int>& vars, const std::vector<int>& x) const;
  LabeledGraph graph_;
  std::vector<int> cardinality_;
  std::vector<Factor> factors_;
};

}  // namespace jtsmc
