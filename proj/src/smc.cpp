#include "jtsmc/smc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "jtsmc/errors.hpp"
#include "jtsmc/simd.hpp"

namespace jtsmc {

LabeledGraph ExtendedState::external_graph(int p) const { return graph_of(tree).relabeled(order.labels, p); }

JunctionTree ExtendedState::external_tree() const { return tree.relabeled(order.labels, tree.n_nodes); }

TemporalModel::TemporalModel(ScoreModel s, int bandwidth, ExpanderConfig e)
    : score(std::move(s)), order_cfg{score.p(), bandwidth}, expander_cfg(e) {
  order_cfg.validate();
  expander_cfg.validate();
}

double log_unnormalised_target(const TemporalModel& model, const ExtendedState& x) {
  const double lg = log_gamma_graph(model.score, x.tree, x.order);
  if (is_structural_zero(lg)) return lg;
  return lg - linking_structure(graph_of(x.tree)).log_mu + log_order_law(x.order, model.order_cfg);
}

namespace {

const JunctionTree& single_node_tree() {
  static const JunctionTree t{1, {NodeSet::single(0)}, {}};
  return t;
}

const LinkingStructure& single_node_links() {
  static const LinkingStructure ls = linking_structure(LabeledGraph(1));
  return ls;
}

Particle first_particle(const TemporalModel& model, int label) {
  Particle q;
  q.state.order.labels = {label};
  q.state.tree = single_node_tree();
  q.links = single_node_links();
  q.log_gamma = model.score.log_potential(NodeSet::single(label));
  q.log_weight = q.log_gamma;
  return q;
}

}  // namespace

std::vector<Particle> initial_particles(const TemporalModel& model, int n, const SmcStreams& streams,
                                        const ExtendedState* reference) {
  if (n < 2) throw ValidationError("need at least two particles");
  std::vector<Particle> gen;
  gen.reserve(n);
  const int free = reference ? n - 1 : n;
  for (int i = 0; i < free; ++i) {
    Rng rng = streams.particle(0, i);
    gen.push_back(first_particle(model, sample_order_step(NodeOrder{}, model.order_cfg, rng)));
  }
  if (reference) {
    if (reference->size() != 1 || reference->tree.n_nodes != 1)
      throw InvalidReference("reference must start from one node");
    gen.push_back(first_particle(model, reference->order.labels[0]));
    if (is_structural_zero(gen.back().log_weight)) throw InvalidReference("reference has zero target density");
  }
  return gen;
}

double transition_log_weight(const TemporalModel& model, const Particle& parent, const ExtendedState& child,
                             const LinkingStructure& child_links, double log_forward, double* log_gamma_step) {
  const auto delta = clique_sep_symmetric_diff(parent.links.cliques, parent.links.separators(), child_links.cliques,
                                               child_links.separators());
  const double dg = log_gamma_delta(model.score, delta, child.order);
  if (log_gamma_step) *log_gamma_step = dg;
  if (is_structural_zero(dg)) return dg;
  const LabeledGraph grown = graph_of(child.tree);
  const NodeSet bound = created_separator_bound(grown);
  const double mu = log_mu_ratio(parent.links, child_links, {bound});
  const double backward = -log_collapse_count(parent.links, grown.adj[grown.n - 1]);
  return dg + mu + backward - log_forward;
}

std::vector<double> normalised_weights(const std::vector<Particle>& generation, double* log_mean, double* ess) {
  const std::size_t n = generation.size();
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = generation[i].log_weight;
  const double top = simd::max_value(w.data(), n);
  if (top == -std::numeric_limits<double>::infinity())
    throw AllWeightsZero("every particle has zero weight; prior and data are inconsistent");
  if (!std::isfinite(top)) throw AllWeightsZero("non-finite particle weight");
  double sum = 0.0, sq = 0.0;
  for (double& x : w) {
    x = std::exp(x - top);
    sum += x;
    sq += x * x;
  }
  if (log_mean) *log_mean = top + std::log(sum) - std::log(static_cast<double>(n));
  if (ess) *ess = sum * sum / sq;
  for (double& x : w) x /= sum;
  return w;
}

std::vector<int> multinomial_resample(const std::vector<double>& weights, int n, Rng& rng) {
  std::vector<double> cum(weights.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) cum[i] = acc += weights[i];
  std::vector<int> out(n);
  for (int k = 0; k < n; ++k) {
    const double u = rng.uniform() * acc;
    auto it = std::upper_bound(cum.begin(), cum.end(), u);
    // Never land on a zero-weight tail entry through rounding.
    std::size_t idx = std::min<std::size_t>(it - cum.begin(), cum.size() - 1);
    while (weights[idx] == 0.0 && idx > 0) --idx;
    out[k] = static_cast<int>(idx);
  }
  return out;
}

std::vector<Particle> smc_step(const TemporalModel& model, const std::vector<Particle>& generation,
                               const SmcStreams& streams, int step, const ExtendedState* reference) {
  const int n = static_cast<int>(generation.size());
  const auto w = normalised_weights(generation);
  const int free = reference ? n - 1 : n;
  Rng rs = streams.resampler(step);
  const auto anc = multinomial_resample(w, free, rs);
  std::vector<Particle> next(n);
  for (int i = 0; i < free; ++i) {
    const Particle& parent = generation[anc[i]];
    Rng rng = streams.particle(step, i);
    Particle& q = next[i];
    q.ancestor = anc[i];
    q.state.order = parent.state.order;
    q.state.order.labels.push_back(sample_order_step(parent.state.order, model.order_cfg, rng));
    Expansion ex = expand(parent.state.tree, model.expander_cfg, rng);
    q.state.tree = std::move(ex.tree);
    q.links = std::move(ex.grown);
    double dg = 0.0;
    q.log_weight = transition_log_weight(model, parent, q.state, q.links, ex.log_density, &dg);
    q.log_gamma = parent.log_gamma + dg;
  }
  if (reference) {
    const Particle& parent = generation[n - 1];
    Particle& q = next[n - 1];
    q.ancestor = n - 1;
    q.state = *reference;
    const int m = parent.state.size();
    if (q.state.size() != m + 1 || q.state.order.prefix(m) != parent.state.order)
      throw InvalidReference("reference order does not extend its predecessor");
    const LabeledGraph grown = graph_of(q.state.tree);
    if (grown.n != m + 1 || grown.prefix(m) != graph_of(parent.state.tree))
      throw InvalidReference("reference tree does not extend its predecessor");
    q.links = linking_structure(grown);
    const double forward =
        std::log(neighbourhood_probability(parent.state.tree, grown.adj[m], model.expander_cfg)) - q.links.log_mu;
    double dg = 0.0;
    q.log_weight = transition_log_weight(model, parent, q.state, q.links, forward, &dg);
    q.log_gamma = parent.log_gamma + dg;
    if (is_structural_zero(q.log_gamma)) throw InvalidReference("reference has zero target density");
  }
  return next;
}

ParticleSystem run_smc(const TemporalModel& model, int n, const SmcStreams& streams,
                       const std::vector<ExtendedState>* reference) {
  const int p = model.p();
  if (reference && static_cast<int>(reference->size()) != p) throw InvalidReference("reference must have p states");
  ParticleSystem sys;
  sys.generations.reserve(p);
  sys.generations.push_back(initial_particles(model, n, streams, reference ? &(*reference)[0] : nullptr));
  for (int step = 1; step <= p; ++step) {
    double lm = 0.0, ess = 0.0;
    normalised_weights(sys.generations.back(), &lm, &ess);
    sys.log_mean_weights.push_back(lm);
    sys.ess.push_back(ess);
    if (step == p) break;
    sys.generations.push_back(
        smc_step(model, sys.generations.back(), streams, step, reference ? &(*reference)[step] : nullptr));
  }
  return sys;
}

double log_normalising_constant(const ParticleSystem& system) {
  double s = 0.0;
  for (double lm : system.log_mean_weights) s += lm;
  return s;
}

}  // namespace jtsmc
