#include "jtsmc/pgibbs.hpp"

#include <algorithm>
#include <chrono>
#include <map>

#include "jtsmc/errors.hpp"

namespace jtsmc {

bool Trajectory::consistent() const {
  for (std::size_t m = 0; m < states.size(); ++m) {
    const auto& x = states[m];
    if (x.size() != static_cast<int>(m) + 1 || x.tree.n_nodes != x.size()) return false;
    if (!is_valid_junction_tree(x.tree)) return false;
    if (m == 0) continue;
    const auto& prev = states[m - 1];
    if (x.order.prefix(static_cast<int>(m)) != prev.order) return false;
    if (graph_of(x.tree).prefix(static_cast<int>(m)) != graph_of(prev.tree)) return false;
  }
  return true;
}

Trajectory trace_trajectory(const ParticleSystem& system, int final_index) {
  const int p = static_cast<int>(system.generations.size());
  Trajectory traj;
  traj.states.resize(p);
  int b = final_index;
  traj.log_gamma = system.generations[p - 1][b].log_gamma;
  for (int m = p - 1; m >= 0; --m) {
    const Particle& q = system.generations[m][b];
    traj.states[m] = q.state;
    b = q.ancestor;
  }
  return traj;
}

namespace {

Trajectory draw_final(const ParticleSystem& sys, std::uint64_t seed, std::uint64_t sweep, int p) {
  Rng rng = Rng::derive(seed, sweep, static_cast<std::uint64_t>(p) + 1, ~0ull);
  const auto w = normalised_weights(sys.generations.back());
  return trace_trajectory(sys, multinomial_resample(w, 1, rng)[0]);
}

}  // namespace

Trajectory initial_trajectory(const TemporalModel& model, int n, std::uint64_t seed) {
  const auto sys = run_smc(model, n, SmcStreams{seed, 0});
  return draw_final(sys, seed, 0, model.p());
}

Trajectory csmc_transition(const TemporalModel& model, const Trajectory& reference, int n, std::uint64_t seed,
                           std::uint64_t sweep) {
  if (static_cast<int>(reference.states.size()) != model.p()) throw InvalidReference("reference must have p states");
  const auto sys = run_smc(model, n, SmcStreams{seed, sweep}, &reference.states);
  return draw_final(sys, seed, sweep, model.p());
}

Trajectory refresh(const TemporalModel& model, const Trajectory& traj, Rng& rng, bool redraw_order) {
  Trajectory out = traj;
  const int p = static_cast<int>(out.states.size());
  if (redraw_order && p > 1) {
    const JunctionTree external = out.states.back().external_tree();
    NodeOrder v;
    while (v.size() < p) v.labels.push_back(sample_order_step(v, model.order_cfg, rng));
    std::vector<int> position(p);
    for (int i = 0; i < p; ++i) position[v.labels[i]] = i;
    out.states.back() = ExtendedState{v, external.relabeled(position, p)};
  }
  for (int m = static_cast<int>(out.states.size()) - 1; m >= 1; --m) {
    out.states[m - 1].order = out.states[m].order.prefix(m);
    out.states[m - 1].tree = backward_sample(out.states[m].tree, rng);
  }
  return out;
}

Trajectory trajectory_from_graph(const TemporalModel& model, const LabeledGraph& g, Rng& rng) {
  const int p = model.p();
  if (g.n != p) throw DimensionMismatch("graph size differs from the model");
  if (!is_decomposable(g)) throw NotDecomposable("start graph is not decomposable");
  Trajectory traj;
  traj.states.resize(p);
  NodeOrder identity;
  for (int i = 0; i < p; ++i) identity.labels.push_back(i);
  traj.states.back() = ExtendedState{identity, sample_junction_tree(g, rng)};
  traj.log_gamma = log_gamma_graph(model.score, g);
  if (is_structural_zero(traj.log_gamma)) throw InvalidReference("start graph has zero target density");
  return refresh(model, traj, rng, true);
}

void ChainConfig::validate() const {
  if (n_particles < 2) throw ValidationError("N must be at least 2");
  if (sweeps < 1) throw ValidationError("M must be positive");
  if (effective_burn_in() >= sweeps) throw ValidationError("burn-in must be smaller than M");
}

ChainRecord make_record(long sweep, const Trajectory& traj, int p, double seconds) {
  ChainRecord r;
  r.sweep = sweep;
  r.graph = traj.final_state().external_graph(p);
  if (!is_decomposable(r.graph)) throw Error("sampled graph is not decomposable");
  r.size = r.graph.edge_count();
  r.log_gamma = traj.log_gamma;
  r.seconds = seconds;
  return r;
}

std::vector<ChainRecord> run_chain(const TemporalModel& model, const ChainConfig& cfg, const Trajectory* start,
                                   const std::function<void(const ChainRecord&)>& on_record) {
  cfg.validate();
  const int p = model.p();
  Trajectory x = start ? *start : initial_trajectory(model, cfg.n_particles, cfg.seed);
  const int burn = cfg.effective_burn_in();
  std::vector<ChainRecord> out;
  out.reserve(cfg.sweeps - burn);
  for (long sweep = 1; sweep <= cfg.sweeps; ++sweep) {
    const auto t0 = std::chrono::steady_clock::now();
    x = csmc_transition(model, x, cfg.n_particles, cfg.seed, static_cast<std::uint64_t>(sweep));
    if (cfg.refresh) {
      Rng rng = Rng::derive(cfg.seed, static_cast<std::uint64_t>(sweep), static_cast<std::uint64_t>(p) + 2, ~0ull);
      x = refresh(model, x, rng, cfg.refresh_order);
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (sweep <= burn) continue;
    out.push_back(make_record(sweep, x, p, secs));
    if (on_record) on_record(out.back());
  }
  return out;
}

std::vector<std::vector<double>> edge_marginals(const std::vector<ChainRecord>& records, int p) {
  std::vector<std::vector<double>> m(p, std::vector<double>(p, 0.0));
  if (records.empty()) return m;
  for (const auto& r : records)
    for (auto [a, b] : r.graph.edges()) {
      m[a][b] += 1.0;
      m[b][a] += 1.0;
    }
  for (auto& row : m)
    for (double& x : row) x /= static_cast<double>(records.size());
  return m;
}

std::vector<GraphFrequency> top_k(const std::vector<ChainRecord>& records, std::size_t k) {
  std::map<std::vector<std::pair<int, int>>, long> counts;
  for (const auto& r : records) ++counts[r.graph.edges()];
  std::vector<std::pair<std::vector<std::pair<int, int>>, long>> items(counts.begin(), counts.end());
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<GraphFrequency> out;
  const int p = records.empty() ? 0 : records.front().graph.n;
  for (std::size_t i = 0; i < items.size() && i < k; ++i)
    out.push_back({LabeledGraph(p, items[i].first), items[i].second,
                   static_cast<double>(items[i].second) / static_cast<double>(records.size())});
  return out;
}

GraphFrequency map_graph(const std::vector<ChainRecord>& records) {
  if (records.empty()) throw ValidationError("no records");
  return top_k(records, 1).front();
}

std::vector<double> autocorrelation(const std::vector<double>& x, int max_lag) {
  const std::size_t n = x.size();
  std::vector<double> out(std::max(max_lag, 0) + 1, 1.0);
  if (n == 0) return out;
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  double c0 = 0.0;
  for (double v : x) c0 += (v - mean) * (v - mean);
  if (c0 <= 0.0) return out;
  for (int k = 1; k <= max_lag; ++k) {
    double ck = 0.0;
    for (std::size_t i = 0; i + k < n; ++i) ck += (x[i] - mean) * (x[i + k] - mean);
    out[k] = ck / c0;
  }
  return out;
}

double iact(const std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n < 2) return 1.0;
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  double c0 = 0.0;
  for (double v : x) c0 += (v - mean) * (v - mean);
  if (c0 <= 0.0) return static_cast<double>(2 * n - 1);
  double tau = 1.0;
  for (std::size_t k = 1; k < n; ++k) {
    double ck = 0.0;
    for (std::size_t i = 0; i + k < n; ++i) ck += (x[i] - mean) * (x[i + k] - mean);
    const double rho = ck / c0;
    if (rho < 0.0) break;
    tau += 2.0 * rho;
  }
  return tau;
}

}  // namespace jtsmc
