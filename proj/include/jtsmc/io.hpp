#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

#include "jtsmc/graph.hpp"
#include "jtsmc/oracle.hpp"
#include "jtsmc/pgibbs.hpp"
#include "jtsmc/scores.hpp"

namespace jtsmc::io {

using json = nlohmann::ordered_json;

// {"p": n, "edges": [[a,b],...]} with 1-based labels.
json graph_to_json(const LabeledGraph& g);
LabeledGraph graph_from_json(const json& j);
// {"n_nodes": n, "cliques": [[...],...], "tree_edges": [[i,j],...]}; nodes
// 1-based, clique indices 0-based.
json tree_to_json(const JunctionTree& t);
JunctionTree tree_from_json(const json& j);

// Shortest decimal text that reads back to the same double.
std::string format_double(double x);

// "1-3;1-5" style edge list with 1-based labels.
std::string edge_list_string(const LabeledGraph& g);
LabeledGraph edge_list_from_string(int p, const std::string& s);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
CsvTable read_csv(const std::filesystem::path& path);

// Non-negative integer columns; cardinality 1 + max observed unless given.
DiscreteData load_discrete_csv(const std::filesystem::path& path,
                               const std::vector<int>& cardinality_override = {});
ContinuousData load_continuous_csv(const std::filesystem::path& path);
Eigen::MatrixXd load_matrix_csv(const std::filesystem::path& path);
// Table of cells with a trailing count column, expanded to observations.
// Throws ValidationError when expected_total is given and differs.
DiscreteData load_count_table(const std::filesystem::path& path, std::optional<long> expected_total = {});

void write_discrete_csv(const std::filesystem::path& path, const DiscreteData& d);
void write_continuous_csv(const std::filesystem::path& path, const ContinuousData& d);

std::string record_to_jsonl(const ChainRecord& r);
// Records of a trajectory file; ParseError names the offending line.
std::vector<ChainRecord> read_trajectory(const std::filesystem::path& path, int p);

// p x p matrix with variable names on both margins.
void write_matrix_csv(const std::filesystem::path& path, const std::vector<std::string>& names,
                      const std::vector<std::vector<double>>& m);
std::vector<std::vector<double>> read_matrix_csv(const std::filesystem::path& path);

// edge_marginals.csv, map_graph.json, top_graphs.csv, size_autocorr.csv.
// Returns the summary block stored in run metadata.
json write_summaries(const std::filesystem::path& dir, const std::vector<ChainRecord>& records, int p,
                     const std::vector<std::string>& names, int max_lag = 100, std::size_t top = 20);

void write_exact_posterior(const std::filesystem::path& dir, const ExactPosterior& post,
                           const std::vector<std::string>& names);

void write_json(const std::filesystem::path& path, const json& j);
json read_json(const std::filesystem::path& path);

std::vector<std::string> default_names(int p);

}  // namespace jtsmc::io
