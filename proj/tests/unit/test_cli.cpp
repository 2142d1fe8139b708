#include "doctest.h"
#include "helpers.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "jtsmc/io.hpp"

using namespace jtsmc;
namespace fs = std::filesystem;

namespace {

const fs::path data_dir = JTSMC_TEST_DATA;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "jtsmc_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Runs the CLI with stdout/stderr captured in `log`; returns the exit code.
int run(const std::string& args, const fs::path& log = "/dev/null") {
  const std::string cmd = std::string(JTSMC_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::string czech() { return (data_dir / "czech_autoworkers_counts.csv").string(); }

double probability_sum(const fs::path& csv) {
  double s = 0.0;
  for (const auto& r : io::read_csv(csv).rows) s += std::stod(r[2]);
  return s;
}

}  // namespace

TEST_CASE("exact on three nodes under the uniform prior") {
  const fs::path dir = scratch("exact3");
  REQUIRE(run("exact --model uniform --p 3 --out " + dir.string()) == 0);
  const auto t = io::read_csv(dir / "exact_posterior.csv");
  REQUIRE(t.rows.size() == 8);
  for (const auto& r : t.rows) CHECK(std::stod(r[2]) == doctest::Approx(0.125).epsilon(1e-12));
  CHECK(probability_sum(dir / "exact_posterior.csv") == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(io::read_json(dir / "run_meta.json")["graphs"].get<int>() == 8);
}

TEST_CASE("exact on the Czech table") {
  const fs::path dir = scratch("exact_czech");
  REQUIRE(run("exact --data " + czech() + " --out " + dir.string()) == 0);
  const auto t = io::read_csv(dir / "exact_posterior.csv");
  CHECK(t.rows.size() == 18154);
  CHECK(std::abs(probability_sum(dir / "exact_posterior.csv") - 1.0) < 1e-9);
  const auto top = testing::czech_top_five();
  CHECK(io::edge_list_from_string(6, t.rows[0][1]) == top[0].first);
  CHECK(std::stod(t.rows[0][2]) == doctest::Approx(top[0].second).epsilon(0.01));
  CHECK(run("exact --model uniform --p 7") == 2);
}

TEST_CASE("a one-sweep chain writes well-formed outputs") {
  const fs::path dir = scratch("m1");
  REQUIRE(run("sample --data " + czech() + " --N 10 --M 1 --out " + dir.string()) == 0);
  const auto recs = io::read_trajectory(dir / "trajectory.jsonl", 6);
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].sweep == 1);
  const auto m = io::read_matrix_csv(dir / "edge_marginals.csv");
  CHECK(m.size() == 6);
  CHECK(io::graph_from_json(io::read_json(dir / "map_graph.json")) == recs[0].graph);
  CHECK(io::read_csv(dir / "top_graphs.csv").rows.size() == 1);
  CHECK(io::read_csv(dir / "size_autocorr.csv").rows.size() == 1);
  const auto meta = io::read_json(dir / "run_meta.json");
  CHECK(meta["command"] == "sample");
  CHECK(meta["config"]["seed"].get<std::uint64_t>() == 1);
  CHECK(meta["summary"]["records"].get<int>() == 1);
  CHECK(meta.contains("version"));
  CHECK(meta.contains("isa"));
}

TEST_CASE("same seed gives a byte-identical trajectory, also when replayed from run_meta") {
  const fs::path a = scratch("seed_a"), b = scratch("seed_b"), c = scratch("seed_c");
  const std::string args = "sample --data " + czech() + " --N 10 --M 40 --seed 77 --out ";
  REQUIRE(run(args + a.string()) == 0);
  REQUIRE(run(args + b.string()) == 0);
  CHECK(slurp(a / "trajectory.jsonl") == slurp(b / "trajectory.jsonl"));
  REQUIRE(run("sample --config " + (a / "run_meta.json").string() + " --out " + c.string()) == 0);
  CHECK(slurp(a / "trajectory.jsonl") == slurp(c / "trajectory.jsonl"));
}

TEST_CASE("config file sits under explicit flags") {
  const fs::path dir = scratch("config");
  io::write_json(dir / "cfg.json", io::json{{"model", "uniform"}, {"p", 4}, {"M", 5}, {"N", 50}});
  REQUIRE(run("sample --config " + (dir / "cfg.json").string() + " --N 3 --out " + dir.string()) == 0);
  const auto meta = io::read_json(dir / "run_meta.json");
  CHECK(meta["config"]["N"].get<int>() == 3);
  CHECK(meta["config"]["M"].get<int>() == 5);
  CHECK(meta["config"]["model"] == "uniform");
  io::write_json(dir / "bad.json", io::json{{"no-such-flag", 1}});
  CHECK(run("sample --config " + (dir / "bad.json").string()) == 2);
}

TEST_CASE("analyze reproduces the sampler's summaries") {
  const fs::path dir = scratch("analyze"), again = scratch("analyze_again");
  REQUIRE(run("sample --data " + czech() + " --N 10 --M 60 --seed 5 --out " + dir.string()) == 0);
  REQUIRE(run("analyze " + (dir / "trajectory.jsonl").string() + " --out " + again.string()) == 0);
  for (const char* f : {"edge_marginals.csv", "map_graph.json", "top_graphs.csv", "size_autocorr.csv"})
    CHECK_MESSAGE(slurp(dir / f) == slurp(again / f), f);
  const auto n = io::read_trajectory(dir / "trajectory.jsonl", 6).size();
  CHECK(run("analyze " + (dir / "trajectory.jsonl").string() + " --out " + again.string() + " --burnin " +
            std::to_string(n)) == 2);
  CHECK(run("analyze " + (dir / "trajectory.jsonl").string() + " --out " + again.string() + " --burnin " +
            std::to_string(n - 1)) == 0);
  CHECK(io::read_json(again / "map_graph.json")["frequency"].get<double>() == 1.0);
}

TEST_CASE("analyze of identical graphs and of broken files") {
  const fs::path dir = scratch("analyze_const");
  {
    std::ofstream out(dir / "t.jsonl");
    for (int s = 1; s <= 4; ++s) out << "{\"sweep\":" << s << ",\"edges\":[[1,2]],\"size\":1,\"log_gamma\":-3}\n";
  }
  REQUIRE(run("analyze " + (dir / "t.jsonl").string() + " --p 3") == 0);
  CHECK(io::read_json(dir / "map_graph.json")["frequency"].get<double>() == 1.0);
  {
    std::ofstream out(dir / "bad.jsonl");
    out << "{\"sweep\":1,\"edges\":[[1,2]],\"size\":1,\"log_gamma\":-3}\n{oops\n";
  }
  CHECK(run("analyze " + (dir / "bad.jsonl").string() + " --p 3", dir / "log.txt") == 2);
  CHECK(slurp(dir / "log.txt").find("line 2") != std::string::npos);
  CHECK(run("analyze " + (dir / "t.jsonl").string()) == 2);  // no p known
}

TEST_CASE("exit codes") {
  const fs::path dir = scratch("codes");
  CHECK(run("--help") == 0);
  CHECK(run("") == 2);
  CHECK(run("sample --data " + czech() + " --N 1") == 2);
  CHECK(run("sample --data " + czech() + " --M 10 --burnin 10") == 2);
  CHECK(run("sample --data " + czech() + " --alpha 1.5") == 2);
  CHECK(run("sample --data " + czech() + " --delta 9") == 2);
  CHECK(run("sample --model dirichlet") == 2);
  CHECK(run("exact --data /no/such/file.csv") == 2);
  // An output "directory" that is a regular file is a runtime failure.
  std::ofstream(dir / "file") << "x";
  CHECK(run("exact --model uniform --p 2 --out " + (dir / "file" / "sub").string()) == 3);
}

TEST_CASE("smc writes one log normalising constant per pass") {
  const fs::path dir = scratch("smc");
  REQUIRE(run("smc --model uniform --p 4 --N 20 --R 7 --out " + dir.string()) == 0);
  const auto t = io::read_csv(dir / "logz.csv");
  REQUIRE(t.rows.size() == 7);
  for (const auto& r : t.rows) CHECK(std::isfinite(std::stod(r[1])));
}

TEST_CASE("Gaussian generator outputs") {
  const fs::path dir = scratch("gauss");
  REQUIRE(run("gen-gaussian --p 50 --n 100 --rho 0.9 --sigma2 1.0 --lags 1,2,3,4,5 --seed 3 --out " +
              dir.string()) == 0);
  const ContinuousData d = io::load_continuous_csv(dir / "data.csv");
  CHECK(d.n() == 100);
  CHECK(d.p() == 50);
  const LabeledGraph g = io::graph_from_json(io::read_json(dir / "true_graph.json"));
  CHECK(g.n == 50);
  CHECK(is_decomposable(g));
  const auto meta = io::read_json(dir / "meta.json");
  CHECK(meta["min_eigenvalue"].get<double>() > 0.0);
  CHECK(meta["offgraph_precision_zero_fraction"].get<double>() == 1.0);
  CHECK(run("gen-gaussian --p 20 --covariance verbatim --out " + dir.string(), dir / "log.txt") == 2);
  CHECK(slurp(dir / "log.txt").find("leading minor") != std::string::npos);
}

TEST_CASE("discrete generator outputs") {
  const fs::path dir = scratch("disc");
  REQUIRE(run("gen-discrete --graph " + (data_dir / "discrete_p15_graph.json").string() +
              " --n 100 --seed 2 --out " + dir.string()) == 0);
  const DiscreteData d = io::load_discrete_csv(dir / "data.csv", std::vector<int>(15, 2));
  CHECK(d.n() == 100);
  CHECK(d.p() == 15);
  io::write_json(dir / "cycle.json", io::json{{"p", 4}, {"edges", {{1, 2}, {2, 3}, {3, 4}, {1, 4}}}});
  CHECK(run("gen-discrete --graph " + (dir / "cycle.json").string()) == 2);
  CHECK(run("gen-discrete --graph " + (dir / "cycle.json").string() + " --cardinality 2,2") == 2);
}
