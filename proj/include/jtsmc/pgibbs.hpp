#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "jtsmc/smc.hpp"

namespace jtsmc {

// x_1..x_p, each extending its predecessor.
struct Trajectory {
  std::vector<ExtendedState> states;
  double log_gamma = 0.0;  // score of the final graph

  const ExtendedState& final_state() const { return states.back(); }
  bool consistent() const;
};

// Follows ancestor indices back from particle `final_index` of the last generation.
Trajectory trace_trajectory(const ParticleSystem& system, int final_index);

// One unconditional SMC pass and a weighted draw of its final particle.
Trajectory initial_trajectory(const TemporalModel& model, int n, std::uint64_t seed);

// Conditional SMC with the last particle pinned to `reference`, then a
// weighted final draw and ancestry trace. Streams are keyed by (seed, sweep).
Trajectory csmc_transition(const TemporalModel& model, const Trajectory& reference, int n, std::uint64_t seed,
                           std::uint64_t sweep);

// Keeps the final tree on external labels and redraws the past. With
// redraw_order the node order is first redrawn from rho_p and the final tree
// relabelled to it (an exact Gibbs step: order and external tree are
// independent at step p); then x_{p-1},...,x_1 come from the retrospective
// kernels. Without it x_p is kept verbatim.
Trajectory refresh(const TemporalModel& model, const Trajectory& traj, Rng& rng, bool redraw_order = true);

// A path-target draw conditional on the final external graph: uniform
// junction tree, order from rho_p, past from the retrospective kernels.
Trajectory trajectory_from_graph(const TemporalModel& model, const LabeledGraph& g, Rng& rng);

struct ChainConfig {
  int n_particles = 100;
  int sweeps = 10000;
  int burn_in = -1;  // negative: 30% of sweeps
  bool refresh = true;
  bool refresh_order = true;  // redraw the node order inside the refresh
  std::uint64_t seed = 1;

  int effective_burn_in() const { return burn_in < 0 ? (3 * sweeps) / 10 : burn_in; }
  void validate() const;
};

struct ChainRecord {
  long sweep = 0;
  LabeledGraph graph;  // external labels
  int size = 0;
  double log_gamma = 0.0;
  double seconds = 0.0;
};

// Runs the chain from `start` (or from initial_trajectory) and returns the
// post-burn-in records; `on_record` sees each record as it is produced.
std::vector<ChainRecord> run_chain(const TemporalModel& model, const ChainConfig& cfg,
                                   const Trajectory* start = nullptr,
                                   const std::function<void(const ChainRecord&)>& on_record = {});

ChainRecord make_record(long sweep, const Trajectory& traj, int p, double seconds);

std::vector<std::vector<double>> edge_marginals(const std::vector<ChainRecord>& records, int p);

struct GraphFrequency {
  LabeledGraph graph;
  long count = 0;
  double frequency = 0.0;
};

// Graphs by decreasing frequency, ties by lexicographic edge list.
std::vector<GraphFrequency> top_k(const std::vector<ChainRecord>& records, std::size_t k);
GraphFrequency map_graph(const std::vector<ChainRecord>& records);

// Biased sample autocorrelation for lags 0..max_lag; all ones for a
// constant series.
std::vector<double> autocorrelation(const std::vector<double>& x, int max_lag);
// 1 + 2 * sum of autocorrelations up to the first negative one.
double iact(const std::vector<double>& x);

}  // namespace jtsmc
