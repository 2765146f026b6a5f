#pragma once

// Plain-text inputs:
//   model files     blocks "<name> <rows> <cols>" followed by rows*cols
//                   whitespace-separated entries, row-major; names A, F, C.
//   graph files     one edge per line, "src dst weight"; weight may be "inf".
//   set systems     one assignment per line, "element -> element".
// Blank lines and text after '#' are ignored everywhere.

#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lyap/enriched.hpp"
#include "lyap/kalman.hpp"

namespace lyap::io {

namespace detail {

inline std::string strip_comment(std::string line) {
  if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
  return line;
}

inline std::vector<std::string> tokens(std::istream& in) {
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(strip_comment(line));
    std::string tok;
    while (ls >> tok) out.push_back(tok);
  }
  return out;
}

inline double parse_number(const std::string& tok, const std::string& where) {
  if (tok == "inf" || tok == "Inf" || tok == "INF") return std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(where + ": expected a number, got '" + tok + "'");
  }
}

inline std::size_t parse_count(const std::string& tok, const std::string& where) {
  const double v = parse_number(tok, where);
  if (!(v >= 0.0) || v != std::floor(v) || v > 1e6) throw ConfigError(where + ": bad dimension '" + tok + "'");
  return static_cast<std::size_t>(v);
}

inline std::ifstream open(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  return in;
}

}  // namespace detail

inline std::map<std::string, DenseMatrix> read_matrix_blocks(std::istream& in) {
  const auto toks = detail::tokens(in);
  std::map<std::string, DenseMatrix> out;
  std::size_t i = 0;
  while (i < toks.size()) {
    if (i + 3 > toks.size()) throw ConfigError("matrix block: truncated header");
    const std::string name = toks[i];
    const auto rows = detail::parse_count(toks[i + 1], "matrix " + name);
    const auto cols = detail::parse_count(toks[i + 2], "matrix " + name);
    i += 3;
    if (i + rows * cols > toks.size()) throw ConfigError("matrix " + name + ": expected " + std::to_string(rows * cols) + " entries");
    std::vector<double> entries;
    for (std::size_t k = 0; k < rows * cols; ++k) {
      const double v = detail::parse_number(toks[i++], "matrix " + name);
      if (!std::isfinite(v)) throw ConfigError("matrix " + name + ": non-finite entry");
      entries.push_back(v);
    }
    if (!out.emplace(name, DenseMatrix(rows, cols, std::move(entries))).second)
      throw ConfigError("matrix " + name + " given twice");
  }
  return out;
}

inline KalmanModel read_model(std::istream& in) {
  auto blocks = read_matrix_blocks(in);
  for (const char* need : {"A", "F", "C"})
    if (!blocks.count(need)) throw ConfigError(std::string("model file: missing block ") + need);
  return {blocks.at("A"), blocks.at("F"), blocks.at("C")};
}

inline KalmanModel read_model_file(const std::string& path) {
  auto in = detail::open(path);
  return read_model(in);
}

inline void write_matrix_block(std::ostream& out, const std::string& name, const DenseMatrix& m) {
  out << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  out.precision(17);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) out << (j ? " " : "") << m(i, j);
    out << '\n';
  }
}

inline void write_model(std::ostream& out, const KalmanModel& model) {
  write_matrix_block(out, "A", model.A);
  write_matrix_block(out, "F", model.F);
  write_matrix_block(out, "C", model.C);
}

struct GraphSpec {
  std::vector<std::string> nodes;
  std::vector<WeightedEdge> edges;
};

// Node names are numbered in order of first appearance.
inline GraphSpec read_graph(std::istream& in) {
  GraphSpec g;
  auto node = [&](const std::string& name) {
    for (std::size_t i = 0; i < g.nodes.size(); ++i)
      if (g.nodes[i] == name) return i;
    g.nodes.push_back(name);
    return g.nodes.size() - 1;
  };
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(detail::strip_comment(line));
    std::string src, dst, w, extra;
    if (!(ls >> src)) continue;
    const std::string where = "graph line " + std::to_string(lineno);
    if (!(ls >> dst >> w) || (ls >> extra)) throw ConfigError(where + ": expected 'src dst weight'");
    const double weight = detail::parse_number(w, where);
    if (!(weight >= 0.0)) throw ConfigError(where + ": negative weight");
    const auto s = node(src);
    const auto d = node(dst);
    g.edges.push_back({s, d, weight});
  }
  return g;
}

inline GraphSpec read_graph_file(const std::string& path) {
  auto in = detail::open(path);
  return read_graph(in);
}

// Elements are numbered in order of first appearance on either side.
inline SetSystem read_set_system(std::istream& in) {
  std::vector<std::string> names;
  std::map<std::size_t, std::size_t> map;
  auto elem = [&](const std::string& name) {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return i;
    names.push_back(name);
    return names.size() - 1;
  };
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(detail::strip_comment(line));
    std::string from, arrow, to, extra;
    if (!(ls >> from)) continue;
    const std::string where = "set system line " + std::to_string(lineno);
    if (!(ls >> arrow >> to) || arrow != "->" || (ls >> extra)) throw ConfigError(where + ": expected 'a -> b'");
    const auto f = elem(from);
    const auto t = elem(to);
    if (!map.emplace(f, t).second) throw ConfigError(where + ": '" + from + "' mapped twice");
  }
  std::vector<std::size_t> point_map(names.size());
  for (std::size_t i = 0; i < names.size(); ++i) {
    auto it = map.find(i);
    if (it == map.end()) throw ConfigError("set system: no image for '" + names[i] + "'");
    point_map[i] = it->second;
  }
  return {names, point_map};
}

inline SetSystem read_set_system_file(const std::string& path) {
  auto in = detail::open(path);
  return read_set_system(in);
}

}  // namespace lyap::io
