// jtsmc: sample, score and generate decomposable graphical models.
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"

#include "jtsmc/errors.hpp"
#include "jtsmc/generate.hpp"
#include "jtsmc/io.hpp"
#include "jtsmc/oracle.hpp"
#include "jtsmc/pgibbs.hpp"
#include "jtsmc/simd.hpp"

#ifndef JTSMC_VERSION
#define JTSMC_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using namespace jtsmc;
using io::json;

namespace {

std::string config_scalar(const json& v, const std::string& key) {
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number()) return v.dump();
  throw ValidationError("unsupported value for config key " + key);
}

// Keys are long flag names without dashes. A run_meta.json is accepted as
// is: its "config" block is used.
std::vector<CLI::ConfigItem> read_config(const std::string& path) {
  const json j = io::read_json(path);
  const json& c = j.is_object() && j.contains("config") && j.contains("command") ? j["config"] : j;
  if (!c.is_object()) throw ValidationError(path + ": config must be a JSON object");
  std::vector<CLI::ConfigItem> items;
  for (auto it = c.begin(); it != c.end(); ++it) {
    if (it.value().is_null()) continue;
    CLI::ConfigItem item;
    item.name = it.key();
    if (it.value().is_array()) {
      for (const auto& e : it.value()) item.inputs.push_back(config_scalar(e, it.key()));
    } else {
      item.inputs.push_back(config_scalar(it.value(), it.key()));
    }
    items.push_back(std::move(item));
  }
  return items;
}

struct ModelOptions {
  std::string data;
  std::string model = "dirichlet";
  int p = 0;
  double pseudo_count_total = 1.0;
  double dof = 0.0;  // 0: p
  std::string scale = "identity";
  int max_clique = 0;

  void add(CLI::App* app) {
    app->add_option("--data", data, "CSV data: integer categories (optionally with a trailing count column) "
                                    "for dirichlet, real values for wishart");
    app->add_option("--model", model, "Likelihood")->check(CLI::IsMember({"uniform", "dirichlet", "wishart"}));
    app->add_option("--p", p, "Number of variables for the uniform model");
    app->add_option("--pseudo-count-total", pseudo_count_total, "Total Dirichlet pseudo count");
    app->add_option("--dof", dof, "Wishart degrees of freedom (default p)");
    app->add_option("--scale", scale, "Wishart scale: identity or a headerless CSV matrix");
    app->add_option("--max-clique", max_clique, "Give zero prior mass to larger cliques (0: off)");
  }

  json to_json() const {
    return json{{"data", data},
                {"model", model},
                {"p", p},
                {"pseudo-count-total", pseudo_count_total},
                {"dof", dof},
                {"scale", scale},
                {"max-clique", max_clique}};
  }
};

struct LoadedModel {
  ScoreModel score;
  std::vector<std::string> names;
  json info;
};

bool is_count_table(const fs::path& path) {
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  while (!header.empty() && (header.back() == '\r' || header.back() == ' ')) header.pop_back();
  const auto comma = header.find_last_of(',');
  std::string last = comma == std::string::npos ? header : header.substr(comma + 1);
  last.erase(std::remove(last.begin(), last.end(), '"'), last.end());
  return last == "count";
}

LoadedModel load_model(const ModelOptions& o) {
  LoadedModel out{ScoreModel::uniform(1), {}, json::object()};
  if (o.model == "uniform") {
    int p = o.p;
    if (p <= 0 && !o.data.empty()) p = io::read_csv(o.data).header.size();
    if (p <= 0) throw ValidationError("uniform model needs --p or --data");
    out.score = ScoreModel::uniform(p);
    out.names = io::default_names(p);
  } else if (o.data.empty()) {
    throw ValidationError("--data is required for the " + o.model + " model");
  } else if (o.model == "dirichlet") {
    DiscreteData d = is_count_table(o.data) ? io::load_count_table(o.data) : io::load_discrete_csv(o.data);
    out.names = d.names;
    out.info = json{{"n", d.n()}, {"cardinality", d.cardinality}};
    out.score = ScoreModel::dirichlet(std::move(d), o.pseudo_count_total);
  } else {
    ContinuousData d = io::load_continuous_csv(o.data);
    const int p = d.p();
    const double dof = o.dof > 0.0 ? o.dof : static_cast<double>(p);
    Eigen::MatrixXd scale =
        o.scale == "identity" ? Eigen::MatrixXd::Identity(p, p) : io::load_matrix_csv(o.scale);
    out.names = d.names;
    out.info = json{{"n", d.n()}, {"dof", dof}};
    out.score = ScoreModel::wishart(std::move(d), dof, std::move(scale));
  }
  if (o.max_clique > 0) out.score = out.score.with_size_cap(o.max_clique);
  out.info["p"] = out.score.p();
  return out;
}

struct SamplerOptions {
  int n_particles = 100;
  int sweeps = 10000;
  int burn_in = -1;
  double alpha = 0.5;
  double beta = 0.5;
  int delta = 0;  // 0: p
  std::uint64_t seed = 1;
  bool no_refresh = false;
  bool keep_order = false;

  void add(CLI::App* app, bool chain) {
    app->add_option("--N", n_particles, "Particles per SMC pass");
    app->add_option("--alpha", alpha, "Expander subtree growth probability");
    app->add_option("--beta", beta, "Expander isolation probability");
    app->add_option("--delta", delta, "Node-order bandwidth (default p)");
    app->add_option("--seed", seed, "64-bit seed");
    if (!chain) return;
    app->add_option("--M", sweeps, "Particle Gibbs sweeps");
    app->add_option("--burnin", burn_in, "Sweeps discarded (default 30% of M)");
    app->add_flag("--no-refresh", no_refresh, "Skip the systematic refreshment step");
    app->add_flag("--keep-order", keep_order, "Refresh the past without redrawing the node order");
  }

  ExpanderConfig expander() const { return ExpanderConfig{alpha, beta}; }
  int bandwidth(int p) const {
    if (delta < 0 || delta > p) throw ValidationError("delta must lie in [1, p]");
    return delta > 0 ? delta : p;
  }

  json to_json(bool chain) const {
    json j{{"N", n_particles}, {"alpha", alpha}, {"beta", beta}, {"delta", delta}, {"seed", seed}};
    if (chain) {
      j["M"] = sweeps;
      j["burnin"] = burn_in;
      j["no-refresh"] = no_refresh;
      j["keep-order"] = keep_order;
    }
    return j;
  }
};

json merged(json a, const json& b) {
  for (auto it = b.begin(); it != b.end(); ++it) a[it.key()] = it.value();
  return a;
}

json meta_header(const std::string& command, const json& config) {
  return json{{"command", command},
              {"version", JTSMC_VERSION},
              {"isa", simd::isa_name(simd::active_isa())},
              {"config", config}};
}

fs::path prepare_out(const std::string& out) {
  const fs::path dir = out.empty() ? fs::path(".") : fs::path(out);
  fs::create_directories(dir);
  return dir;
}

double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void cmd_sample(const ModelOptions& mo, const SamplerOptions& so, const std::string& out) {
  const auto t0 = std::chrono::steady_clock::now();
  LoadedModel lm = load_model(mo);
  const int p = lm.score.p();
  const TemporalModel model(std::move(lm.score), so.bandwidth(p), so.expander());
  ChainConfig cfg;
  cfg.n_particles = so.n_particles;
  cfg.sweeps = so.sweeps;
  cfg.burn_in = so.burn_in;
  cfg.refresh = !so.no_refresh;
  cfg.refresh_order = !so.keep_order;
  cfg.seed = so.seed;
  cfg.validate();

  const fs::path dir = prepare_out(out);
  std::ofstream traj(dir / "trajectory.jsonl");
  if (!traj) throw Error("cannot write " + (dir / "trajectory.jsonl").string());
  const auto records = run_chain(model, cfg, nullptr, [&](const ChainRecord& r) {
    traj << io::record_to_jsonl(r) << '\n';
  });
  traj.close();
  if (!traj) throw Error("failed writing trajectory.jsonl");

  json summary = io::write_summaries(dir, records, p, lm.names);
  json meta = meta_header("sample", merged(mo.to_json(), merged(so.to_json(true), json{{"out", out}})));
  meta["data_info"] = lm.info;
  meta["names"] = lm.names;
  meta["burn_in_applied"] = cfg.effective_burn_in();
  meta["summary"] = summary;
  meta["seconds"] = elapsed(t0);
  io::write_json(dir / "run_meta.json", meta);
  std::cout << "wrote " << records.size() << " records to " << (dir / "trajectory.jsonl").string() << '\n';
}

void cmd_exact(const ModelOptions& mo, const std::string& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const LoadedModel lm = load_model(mo);
  const ExactPosterior post = exact_posterior(lm.score, lm.score.p());
  const fs::path dir = prepare_out(out);
  io::write_exact_posterior(dir, post, lm.names);
  json meta = meta_header("exact", merged(mo.to_json(), json{{"out", out}}));
  meta["data_info"] = lm.info;
  meta["names"] = lm.names;
  meta["graphs"] = post.graphs.size();
  meta["log_normaliser"] = post.log_normaliser;
  meta["seconds"] = elapsed(t0);
  io::write_json(dir / "run_meta.json", meta);
  std::cout << post.graphs.size() << " graphs written to " << (dir / "exact_posterior.csv").string() << '\n';
}

void cmd_smc(const ModelOptions& mo, const SamplerOptions& so, int passes, const std::string& out) {
  if (passes < 1) throw ValidationError("--R must be positive");
  if (so.n_particles < 2) throw ValidationError("N must be at least 2");
  const auto t0 = std::chrono::steady_clock::now();
  LoadedModel lm = load_model(mo);
  const int p = lm.score.p();
  const TemporalModel model(std::move(lm.score), so.bandwidth(p), so.expander());
  const fs::path dir = prepare_out(out);
  std::ofstream csv(dir / "logz.csv");
  csv << "pass,log_z,final_ess\n";
  for (int r = 0; r < passes; ++r) {
    const auto sys = run_smc(model, so.n_particles, SmcStreams{so.seed, static_cast<std::uint64_t>(r)});
    csv << r << ',' << io::format_double(log_normalising_constant(sys)) << ','
        << io::format_double(sys.ess.back()) << '\n';
  }
  json meta = meta_header("smc", merged(mo.to_json(), merged(so.to_json(false), json{{"R", passes}, {"out", out}})));
  meta["data_info"] = lm.info;
  meta["seconds"] = elapsed(t0);
  io::write_json(dir / "run_meta.json", meta);
  std::cout << passes << " log normalising constant estimates written to " << (dir / "logz.csv").string() << '\n';
}

struct GaussianOptions {
  GaussianSpec spec;
  std::string covariance = "completion";
};

void cmd_gen_gaussian(GaussianOptions o, const std::string& out) {
  o.spec.mode = o.covariance == "verbatim" ? CovarianceMode::verbatim : CovarianceMode::completion;
  const GaussianSample s = generate_gaussian(o.spec);
  const fs::path dir = prepare_out(out);
  io::write_continuous_csv(dir / "data.csv", s.data);
  io::write_json(dir / "true_graph.json", io::graph_to_json(s.graph));
  std::vector<std::vector<double>> cov(o.spec.p, std::vector<double>(o.spec.p));
  for (int a = 0; a < o.spec.p; ++a)
    for (int b = 0; b < o.spec.p; ++b) cov[a][b] = s.covariance(a, b);
  io::write_matrix_csv(dir / "covariance.csv", s.data.names, cov);
  const json config{{"p", o.spec.p},         {"n", o.spec.n},     {"rho", o.spec.rho},
                    {"sigma2", o.spec.sigma2}, {"lags", o.spec.lags}, {"seed", o.spec.seed},
                    {"covariance", o.covariance}, {"out", out}};
  json meta = meta_header("gen-gaussian", config);
  meta["edges"] = s.graph.edge_count();
  meta["min_eigenvalue"] = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(s.covariance).eigenvalues().minCoeff();
  meta["max_offgraph_precision"] = s.max_offgraph_precision;
  meta["offgraph_precision_zero_fraction"] = s.offgraph_zero_fraction;
  meta["max_pattern_error"] = s.max_pattern_error;
  io::write_json(dir / "meta.json", meta);
  std::cout << s.data.n() << "x" << s.data.p() << " Gaussian sample written to " << (dir / "data.csv").string()
            << '\n';
}

struct DiscreteOptions {
  std::string graph;
  std::vector<int> cardinality{2};
  int n = 1000;
  double concentration = 1.0;
  std::uint64_t seed = 1;
};

void cmd_gen_discrete(const DiscreteOptions& o, const std::string& out) {
  const LabeledGraph g = io::graph_from_json(io::read_json(o.graph));
  std::vector<int> card = o.cardinality;
  if (card.size() == 1) card.assign(g.n, card[0]);
  if (static_cast<int>(card.size()) != g.n) throw DimensionMismatch("give one cardinality or one per variable");
  if (o.n < 1) throw ValidationError("n must be positive");
  Rng param_rng = Rng::derive(o.seed, 1);
  const DiscreteModel m(g, card, o.concentration, param_rng);
  Rng rng = Rng::derive(o.seed, 2);
  const DiscreteData d = m.sample(o.n, rng);
  const fs::path dir = prepare_out(out);
  io::write_discrete_csv(dir / "data.csv", d);
  io::write_json(dir / "true_graph.json", io::graph_to_json(g));
  const json config{{"graph", o.graph}, {"cardinality", o.cardinality}, {"n", o.n},
                    {"concentration", o.concentration}, {"seed", o.seed}, {"out", out}};
  json meta = meta_header("gen-discrete", config);
  meta["edges"] = g.edge_count();
  io::write_json(dir / "meta.json", meta);
  std::cout << d.n() << "x" << d.p() << " discrete sample written to " << (dir / "data.csv").string() << '\n';
}

struct AnalyzeOptions {
  std::string trajectory;
  int burn_in = 0;
  int p = 0;
  std::string out;
};

void cmd_analyze(const AnalyzeOptions& o) {
  const fs::path traj = o.trajectory;
  const fs::path dir = o.out.empty() ? traj.parent_path() : fs::path(o.out);
  int p = o.p;
  std::vector<std::string> names;
  const fs::path meta_path = traj.parent_path() / "run_meta.json";
  if (fs::exists(meta_path)) {
    const json meta = io::read_json(meta_path);
    if (meta.contains("names")) names = meta["names"].get<std::vector<std::string>>();
    if (p == 0) p = static_cast<int>(names.size());
  }
  if (p <= 0) throw ValidationError("--p is required when no run_meta.json sits next to the trajectory");
  if (static_cast<int>(names.size()) != p) names = io::default_names(p);
  if (o.burn_in < 0) throw ValidationError("burn-in must be non-negative");
  auto records = io::read_trajectory(traj, p);
  if (static_cast<std::size_t>(o.burn_in) >= records.size())
    throw ValidationError("burn-in " + std::to_string(o.burn_in) + " leaves no records out of " +
                          std::to_string(records.size()));
  records.erase(records.begin(), records.begin() + o.burn_in);
  fs::create_directories(dir.empty() ? fs::path(".") : dir);
  const json summary = io::write_summaries(dir.empty() ? fs::path(".") : dir, records, p, names);
  std::cout << summary.dump() << '\n';
}

// CLI11 only reads config files on the top-level app, so subcommand configs
// are applied here: every key fills an option not given on the command line.
void apply_config(CLI::App* app, const std::string& path) {
  for (const auto& item : read_config(path)) {
    CLI::Option* op = app->get_option_no_throw("--" + item.name);
    if (op == nullptr || item.name == "config") throw ValidationError("unknown config key '" + item.name + "'");
    if (op->count() > 0) continue;
    for (const auto& v : item.inputs) op->add_result(v);
    try {
      op->run_callback();
    } catch (const CLI::Error& e) {
      throw ValidationError("config key '" + item.name + "': " + e.what());
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian structure learning of decomposable graphs by particle Gibbs over junction trees"};
  app.set_version_flag("--version", JTSMC_VERSION);
  app.require_subcommand(1);

  std::string out, config;
  ModelOptions mo;
  SamplerOptions so;

  auto* sample = app.add_subcommand("sample", "Run a particle Gibbs chain and summarise it");
  mo.add(sample);
  so.add(sample, true);
  sample->add_option("--out", out, "Output directory");
  sample->add_option("--config", config, "JSON config (or a run_meta.json); explicit flags win");

  auto* exact = app.add_subcommand("exact", "Exact posterior by enumeration (p <= 6)");
  mo.add(exact);
  exact->add_option("--out", out, "Output directory");
  exact->add_option("--config", config, "JSON config; explicit flags win");

  int passes = 100;
  auto* smc = app.add_subcommand("smc", "Independent SMC passes and their log normalising constants");
  mo.add(smc);
  so.add(smc, false);
  smc->add_option("--R", passes, "Number of passes");
  smc->add_option("--out", out, "Output directory");
  smc->add_option("--config", config, "JSON config; explicit flags win");

  GaussianOptions go;
  auto* gen_gauss = app.add_subcommand("gen-gaussian", "Gaussian data from a banded AR-type graph");
  gen_gauss->add_option("--p", go.spec.p, "Variables");
  gen_gauss->add_option("--n", go.spec.n, "Observations");
  gen_gauss->add_option("--rho", go.spec.rho, "Edge correlation");
  gen_gauss->add_option("--sigma2", go.spec.sigma2, "Variance");
  gen_gauss->add_option("--lags", go.spec.lags, "Candidate lags, e.g. 1,2,3,4,5")->delimiter(',');
  gen_gauss->add_option("--seed", go.spec.seed, "64-bit seed");
  gen_gauss->add_option("--covariance", go.covariance, "completion (positive definite, sparse precision) or verbatim")
      ->check(CLI::IsMember({"completion", "verbatim"}));
  gen_gauss->add_option("--out", out, "Output directory");
  gen_gauss->add_option("--config", config, "JSON config; explicit flags win");

  DiscreteOptions dopt;
  auto* gen_disc = app.add_subcommand("gen-discrete", "Discrete data Markov to a given decomposable graph");
  gen_disc->add_option("--graph", dopt.graph, "Graph JSON {\"p\":..,\"edges\":[[a,b],..]}, 1-based")->required();
  gen_disc->add_option("--cardinality", dopt.cardinality, "One value for all variables or one per variable")
      ->delimiter(',');
  gen_disc->add_option("--n", dopt.n, "Observations");
  gen_disc->add_option("--concentration", dopt.concentration, "Dirichlet concentration per cell");
  gen_disc->add_option("--seed", dopt.seed, "64-bit seed");
  gen_disc->add_option("--out", out, "Output directory");
  gen_disc->add_option("--config", config, "JSON config; explicit flags win");

  AnalyzeOptions ao;
  auto* analyze = app.add_subcommand("analyze", "Recompute summaries from a trajectory file");
  analyze->add_option("trajectory", ao.trajectory, "trajectory.jsonl")->required();
  analyze->add_option("--burnin", ao.burn_in, "Leading records to drop");
  analyze->add_option("--p", ao.p, "Variables (read from run_meta.json when present)");
  analyze->add_option("--out", ao.out, "Output directory (default: next to the trajectory)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    for (auto* sub : app.get_subcommands())
      if (!config.empty()) apply_config(sub, config);
    if (*sample) cmd_sample(mo, so, out);
    else if (*exact) cmd_exact(mo, out);
    else if (*smc) cmd_smc(mo, so, passes, out);
    else if (*gen_gauss) cmd_gen_gaussian(go, out);
    else if (*gen_disc) cmd_gen_discrete(dopt, out);
    else if (*analyze) cmd_analyze(ao);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.is_validation() ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
