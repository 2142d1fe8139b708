#include "jtsmc/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "jtsmc/errors.hpp"

namespace jtsmc::io {

namespace fs = std::filesystem;

json graph_to_json(const LabeledGraph& g) {
  json edges = json::array();
  for (auto [a, b] : g.edges()) edges.push_back({a + 1, b + 1});
  return json{{"p", g.n}, {"edges", edges}};
}

LabeledGraph graph_from_json(const json& j) {
  try {
    LabeledGraph g(j.at("p").get<int>());
    for (const auto& e : j.at("edges")) g.add_edge(e.at(0).get<int>() - 1, e.at(1).get<int>() - 1);
    return g;
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad graph json: ") + e.what());
  }
}

json tree_to_json(const JunctionTree& t) {
  json cliques = json::array();
  for (NodeSet c : t.cliques) {
    json members = json::array();
    c.for_each([&](int v) { members.push_back(v + 1); });
    cliques.push_back(members);
  }
  json edges = json::array();
  for (auto [a, b] : t.edges) edges.push_back({a, b});
  return json{{"n_nodes", t.n_nodes}, {"cliques", cliques}, {"tree_edges", edges}};
}

JunctionTree tree_from_json(const json& j) {
  try {
    JunctionTree t;
    for (const auto& c : j.at("cliques")) {
      NodeSet s;
      for (const auto& v : c) s = s.with(v.get<int>() - 1);
      t.cliques.push_back(s);
    }
    if (j.contains("n_nodes")) {
      t.n_nodes = j.at("n_nodes").get<int>();
    } else {
      NodeSet all;
      for (NodeSet c : t.cliques) all |= c;
      t.n_nodes = all.empty() ? 0 : all.last() + 1;
    }
    for (const auto& e : j.at("tree_edges")) t.edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
    return t;
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad junction tree json: ") + e.what());
  }
}

std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string edge_list_string(const LabeledGraph& g) {
  std::string s;
  for (auto [a, b] : g.edges()) {
    if (!s.empty()) s += ';';
    s += std::to_string(a + 1) + "-" + std::to_string(b + 1);
  }
  return s;
}

LabeledGraph edge_list_from_string(int p, const std::string& s) {
  LabeledGraph g(p);
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ';')) {
    if (item.empty()) continue;
    const auto dash = item.find('-');
    int a = 0, b = 0;
    const char* end = item.data() + item.size();
    const bool ok = dash != std::string::npos &&
                    std::from_chars(item.data(), item.data() + dash, a).ptr == item.data() + dash &&
                    std::from_chars(item.data() + dash + 1, end, b).ptr == end;
    if (!ok || a < 1 || b < 1 || a > p || b > p || a == b) throw ParseError("bad edge '" + item + "'");
    g.add_edge(a - 1, b - 1);
  }
  return g;
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r\"");
    const auto e = cell.find_last_not_of(" \t\r\"");
    out.push_back(b == std::string::npos ? std::string{} : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

long parse_long(const std::string& s, std::size_t line) {
  long v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ParseError("line " + std::to_string(line) + ": expected an integer, got '" + s + "'");
  return v;
}

double parse_double(const std::string& s, std::size_t line) {
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ParseError("line " + std::to_string(line) + ": expected a number, got '" + s + "'");
  return v;
}

}  // namespace

CsvTable read_csv(const fs::path& path) {
  auto in = open_in(path);
  CsvTable t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size())
      throw ParseError(path.string() + " line " + std::to_string(lineno) + ": expected " +
                       std::to_string(t.header.size()) + " fields");
    t.rows.push_back(std::move(cells));
  }
  if (t.header.empty()) throw ParseError(path.string() + " is empty");
  return t;
}

DiscreteData load_discrete_csv(const fs::path& path, const std::vector<int>& cardinality_override) {
  const auto t = read_csv(path);
  DiscreteData d;
  d.names = t.header;
  const std::size_t p = t.header.size();
  d.columns.assign(p, {});
  d.cardinality.assign(p, 1);
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    for (std::size_t j = 0; j < p; ++j) {
      const long v = parse_long(t.rows[r][j], r + 2);
      if (v < 0) throw ParseError("line " + std::to_string(r + 2) + ": negative category");
      d.columns[j].push_back(static_cast<std::uint32_t>(v));
      d.cardinality[j] = std::max(d.cardinality[j], static_cast<int>(v) + 1);
    }
  if (!cardinality_override.empty()) {
    if (cardinality_override.size() != p) throw DimensionMismatch("cardinality override has the wrong length");
    d.cardinality = cardinality_override;
  }
  d.validate();
  return d;
}

ContinuousData load_continuous_csv(const fs::path& path) {
  const auto t = read_csv(path);
  ContinuousData d;
  d.names = t.header;
  d.values.resize(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(t.header.size()));
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    for (std::size_t j = 0; j < t.header.size(); ++j) d.values(r, j) = parse_double(t.rows[r][j], r + 2);
  return d;
}

Eigen::MatrixXd load_matrix_csv(const fs::path& path) {
  auto in = open_in(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    for (const auto& c : split(line)) row.push_back(parse_double(c, lineno));
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd m(rows.size(), rows.empty() ? 0 : rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != static_cast<std::size_t>(m.cols())) throw ParseError("ragged matrix in " + path.string());
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

DiscreteData load_count_table(const fs::path& path, std::optional<long> expected_total) {
  const auto t = read_csv(path);
  if (t.header.size() < 2) throw ParseError("count table needs variables and a count column");
  const std::size_t p = t.header.size() - 1;
  DiscreteData d;
  d.names.assign(t.header.begin(), t.header.end() - 1);
  d.columns.assign(p, {});
  d.cardinality.assign(p, 1);
  long total = 0;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const long count = parse_long(t.rows[r][p], r + 2);
    if (count < 0) throw ParseError("line " + std::to_string(r + 2) + ": negative count");
    total += count;
    for (std::size_t j = 0; j < p; ++j) {
      const long v = parse_long(t.rows[r][j], r + 2);
      d.cardinality[j] = std::max(d.cardinality[j], static_cast<int>(v) + 1);
      d.columns[j].insert(d.columns[j].end(), count, static_cast<std::uint32_t>(v));
    }
  }
  if (expected_total && total != *expected_total)
    throw ValidationError("count table sums to " + std::to_string(total) + ", expected " +
                          std::to_string(*expected_total));
  d.validate();
  return d;
}

void write_discrete_csv(const fs::path& path, const DiscreteData& d) {
  auto out = open_out(path);
  for (int j = 0; j < d.p(); ++j) out << (j ? "," : "") << d.names[j];
  out << '\n';
  for (int i = 0; i < d.n(); ++i) {
    for (int j = 0; j < d.p(); ++j) out << (j ? "," : "") << d.columns[j][i];
    out << '\n';
  }
}

void write_continuous_csv(const fs::path& path, const ContinuousData& d) {
  auto out = open_out(path);
  for (int j = 0; j < d.p(); ++j) out << (j ? "," : "") << d.names[j];
  out << '\n';
  for (int i = 0; i < d.n(); ++i) {
    for (int j = 0; j < d.p(); ++j) out << (j ? "," : "") << format_double(d.values(i, j));
    out << '\n';
  }
}

std::string record_to_jsonl(const ChainRecord& r) {
  json edges = json::array();
  for (auto [a, b] : r.graph.edges()) edges.push_back({a + 1, b + 1});
  // log_gamma as a raw number so the line round-trips exactly.
  std::string s = json{{"sweep", r.sweep}, {"edges", edges}, {"size", r.size}}.dump();
  s.pop_back();
  s += ",\"log_gamma\":" + format_double(r.log_gamma) + "}";
  return s;
}

std::vector<ChainRecord> read_trajectory(const fs::path& path, int p) {
  auto in = open_in(path);
  std::vector<ChainRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = json::parse(line);
      ChainRecord r;
      r.sweep = j.at("sweep").get<long>();
      r.graph = LabeledGraph(p);
      for (const auto& e : j.at("edges")) r.graph.add_edge(e.at(0).get<int>() - 1, e.at(1).get<int>() - 1);
      r.size = j.at("size").get<int>();
      r.log_gamma = j.at("log_gamma").get<double>();
      if (r.size != r.graph.edge_count()) throw ParseError("size does not match the edge list");
      out.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw ParseError(path.string() + " line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void write_matrix_csv(const fs::path& path, const std::vector<std::string>& names,
                      const std::vector<std::vector<double>>& m) {
  auto out = open_out(path);
  out << "variable";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  for (std::size_t i = 0; i < m.size(); ++i) {
    out << names[i];
    for (double x : m[i]) out << ',' << format_double(x);
    out << '\n';
  }
}

std::vector<std::vector<double>> read_matrix_csv(const fs::path& path) {
  const auto t = read_csv(path);
  std::vector<std::vector<double>> m;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    std::vector<double> row;
    for (std::size_t j = 1; j < t.rows[r].size(); ++j) row.push_back(parse_double(t.rows[r][j], r + 2));
    m.push_back(std::move(row));
  }
  return m;
}

json write_summaries(const fs::path& dir, const std::vector<ChainRecord>& records, int p,
                     const std::vector<std::string>& names, int max_lag, std::size_t top) {
  if (records.empty()) throw ValidationError("no records to summarise");
  write_matrix_csv(dir / "edge_marginals.csv", names, edge_marginals(records, p));

  const auto best = map_graph(records);
  json map = graph_to_json(best.graph);
  map["count"] = best.count;
  map["frequency"] = best.frequency;
  write_json(dir / "map_graph.json", map);

  {
    auto out = open_out(dir / "top_graphs.csv");
    out << "rank,edges,count,frequency\n";
    int rank = 1;
    for (const auto& g : top_k(records, top))
      out << rank++ << ',' << edge_list_string(g.graph) << ',' << g.count << ',' << format_double(g.frequency) << '\n';
  }

  std::vector<double> sizes;
  for (const auto& r : records) sizes.push_back(r.size);
  const int lag = std::min<int>(max_lag, static_cast<int>(sizes.size()) - 1);
  const auto acf = autocorrelation(sizes, std::max(lag, 0));
  {
    auto out = open_out(dir / "size_autocorr.csv");
    out << "lag,autocorrelation\n";
    for (std::size_t k = 0; k < acf.size(); ++k) out << k << ',' << format_double(acf[k]) << '\n';
  }
  return json{{"records", records.size()},
              {"map_frequency", best.frequency},
              {"size_iact", iact(sizes)},
              {"first_sweep", records.front().sweep},
              {"last_sweep", records.back().sweep}};
}

void write_exact_posterior(const fs::path& dir, const ExactPosterior& post, const std::vector<std::string>& names) {
  {
    auto out = open_out(dir / "exact_posterior.csv");
    out << "rank,edges,probability,log_gamma\n";
    int rank = 1;
    for (std::size_t i : post.ranking())
      out << rank++ << ',' << edge_list_string(post.graphs[i]) << ',' << format_double(post.probability[i]) << ','
          << format_double(post.log_gamma[i]) << '\n';
  }
  write_matrix_csv(dir / "exact_edge_marginals.csv", names, post.edge_marginals());
}

void write_json(const fs::path& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  auto in = open_in(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::vector<std::string> default_names(int p) {
  std::vector<std::string> out;
  for (int j = 1; j <= p; ++j) out.push_back("X" + std::to_string(j));
  return out;
}

}  // namespace jtsmc::io
