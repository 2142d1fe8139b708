#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "jtsmc/graph.hpp"
#include "jtsmc/kernels.hpp"
#include "jtsmc/scores.hpp"

namespace jtsmc {

// x_m = (v_m, T_m): node order plus a junction tree on internal nodes 0..m-1.
struct ExtendedState {
  NodeOrder order;
  JunctionTree tree;

  int size() const { return order.size(); }
  // Graph of the tree on external labels 0..p-1 (unvisited labels isolated).
  LabeledGraph external_graph(int p) const;
  // The tree on external labels (needs a full order, size() == p).
  JunctionTree external_tree() const;
};

struct TemporalModel {
  ScoreModel score;
  OrderKernelConfig order_cfg;
  ExpanderConfig expander_cfg;

  TemporalModel(ScoreModel s, int bandwidth, ExpanderConfig e);
  int p() const { return order_cfg.p; }
};

// log eta~_m(x) = log gamma(g under v) - log mu(g) + log rho_m(v). Evaluates
// the full graph score; for tests and diagnostics only.
double log_unnormalised_target(const TemporalModel& model, const ExtendedState& x);

struct Particle {
  ExtendedState state;
  double log_weight = 0.0;
  int ancestor = -1;
  double log_gamma = 0.0;  // accumulated along the path by increments
  LinkingStructure links;  // of g(state.tree)
};

struct ParticleSystem {
  std::vector<std::vector<Particle>> generations;
  std::vector<double> log_mean_weights;  // log(Omega_m / N) per step
  std::vector<double> ess;               // effective sample size per step

  int n_particles() const { return generations.empty() ? 0 : static_cast<int>(generations[0].size()); }
};

// Seeds and stream coordinates of one SMC pass.
struct SmcStreams {
  std::uint64_t seed = 0;
  std::uint64_t sweep = 0;
  Rng resampler(int step) const { return Rng::derive(seed, sweep, static_cast<std::uint64_t>(step), ~0ull); }
  Rng particle(int step, int i) const { return Rng::derive(seed, sweep, static_cast<std::uint64_t>(step), static_cast<std::uint64_t>(i)); }
};

std::vector<Particle> initial_particles(const TemporalModel& model, int n, const SmcStreams& streams,
                                        const ExtendedState* reference = nullptr);

// Resample, extend order and tree, reweight. With a reference, the last
// particle is pinned to it.
std::vector<Particle> smc_step(const TemporalModel& model, const std::vector<Particle>& generation,
                               const SmcStreams& streams, int step, const ExtendedState* reference = nullptr);

// Full pass to step p; `reference`, if given, holds x_1..x_p.
ParticleSystem run_smc(const TemporalModel& model, int n, const SmcStreams& streams,
                       const std::vector<ExtendedState>* reference = nullptr);

double log_normalising_constant(const ParticleSystem& system);

// Incremental log weight of parent -> child, where child's tree grows
// parent's by one node and log_forward is log K(parent, child). The score
// increment log gamma(child) - log gamma(parent) goes to *log_gamma_step.
double transition_log_weight(const TemporalModel& model, const Particle& parent, const ExtendedState& child,
                             const LinkingStructure& child_links, double log_forward,
                             double* log_gamma_step = nullptr);

// Log weights normalised to sum to one (in probability space), max-shifted.
std::vector<double> normalised_weights(const std::vector<Particle>& generation, double* log_mean = nullptr,
                                       double* ess = nullptr);

// Multinomial draw of n indices from normalised weights.
std::vector<int> multinomial_resample(const std::vector<double>& weights, int n, Rng& rng);

}  // namespace jtsmc
