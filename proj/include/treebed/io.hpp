#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "treebed/error.hpp"
#include "treebed/graph.hpp"
#include "treebed/metric.hpp"
#include "treebed/spanning_tree.hpp"

namespace treebed {

namespace detail {

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  /// Next non-blank line split into tokens; false at end of input.
  bool next(std::vector<std::string>& tokens) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      std::istringstream ss(line);
      tokens.clear();
      for (std::string t; ss >> t;) tokens.push_back(t);
      if (!tokens.empty()) return true;
    }
    return false;
  }

  void expect(std::vector<std::string>& tokens, std::size_t count, const char* what) {
    if (!next(tokens)) throw ParseError(line_ + 1, std::string("unexpected end of input, expected ") + what);
    if (tokens.size() != count) {
      throw ParseError(line_, std::string("expected ") + what + " (" + std::to_string(count) +
                                  " fields), got " + std::to_string(tokens.size()) + " fields");
    }
  }

  std::uint64_t integer(const std::string& t, const char* what) const {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size()) {
      throw ParseError(line_, std::string("invalid ") + what + " '" + t + "'");
    }
    return v;
  }

  double real(const std::string& t, const char* what) const {
    double v = 0.0;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size() || t.empty()) {
      throw ParseError(line_, std::string("invalid ") + what + " '" + t + "'");
    }
    return v;
  }

  std::size_t line() const noexcept { return line_; }

  void expect_end() {
    std::vector<std::string> tokens;
    if (next(tokens)) throw ParseError(line_, "unexpected trailing content");
  }

 private:
  std::istream& in_;
  std::size_t line_ = 0;
};

inline std::vector<Edge> read_edges(LineReader& r, std::size_t n, std::size_t m) {
  std::vector<Edge> edges;
  edges.reserve(m);
  std::vector<std::string> tok;
  for (std::size_t i = 0; i < m; ++i) {
    r.expect(tok, 3, "edge 'u v w'");
    Edge e{static_cast<PointId>(r.integer(tok[0], "vertex id")),
           static_cast<PointId>(r.integer(tok[1], "vertex id")), r.real(tok[2], "weight")};
    if (e.u >= n || e.v >= n) throw ParseError(r.line(), "vertex id out of range 0.." + std::to_string(n - 1));
    if (e.u == e.v) throw ParseError(r.line(), "self-loop");
    if (!(e.w > 0.0) || !std::isfinite(e.w)) throw ParseError(r.line(), "weight must be positive and finite");
    edges.push_back(e);
  }
  return edges;
}

}  // namespace detail

/// Decimal text with 17 significant digits, enough to round-trip any double.
inline std::string format_real(double v) {
  char buf[40];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, p);
}

/// Edge list: "n m" then m lines "u v w".
inline WeightedGraph read_graph(std::istream& in) {
  detail::LineReader r(in);
  std::vector<std::string> tok;
  r.expect(tok, 2, "header 'n m'");
  auto n = r.integer(tok[0], "vertex count");
  auto m = r.integer(tok[1], "edge count");
  auto edges = detail::read_edges(r, n, m);
  r.expect_end();
  return WeightedGraph(n, std::move(edges));
}

inline void write_graph(std::ostream& out, const WeightedGraph& g) {
  out << g.size() << ' ' << g.edges().size() << '\n';
  for (const Edge& e : g.edges()) out << e.u << ' ' << e.v << ' ' << format_real(e.w) << '\n';
}

/// Dense metric: "n" then n rows of n distances.
inline MetricSpace read_metric(std::istream& in) {
  detail::LineReader r(in);
  std::vector<std::string> tok;
  r.expect(tok, 1, "header 'n'");
  auto n = r.integer(tok[0], "point count");
  std::vector<double> d;
  d.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    r.expect(tok, n, "a row of distances");
    for (const auto& t : tok) d.push_back(r.real(t, "distance"));
  }
  r.expect_end();
  try {
    return MetricSpace(n, std::move(d));
  } catch (const InvalidArgument& e) {
    throw ParseError(r.line(), e.what());
  }
}

inline void write_metric(std::ostream& out, const MetricSpace& m) {
  out << m.size() << '\n';
  for (PointId i = 0; i < m.size(); ++i) {
    for (PointId j = 0; j < m.size(); ++j) out << (j ? " " : "") << format_real(m(i, j));
    out << '\n';
  }
}

/// Tree edge list: "n n-1" then the edges.
inline SpanningTree read_tree(std::istream& in) {
  detail::LineReader r(in);
  std::vector<std::string> tok;
  r.expect(tok, 2, "header 'n n-1'");
  auto n = r.integer(tok[0], "vertex count");
  auto m = r.integer(tok[1], "edge count");
  if (n == 0 || m != n - 1) throw ParseError(r.line(), "a tree on n vertices has n-1 edges");
  auto edges = detail::read_edges(r, n, m);
  r.expect_end();
  try {
    return SpanningTree(n, std::move(edges));
  } catch (const InvalidArgument& e) {
    throw ParseError(r.line(), e.what());
  }
}

inline void write_tree(std::ostream& out, const SpanningTree& t) {
  out << t.size() << ' ' << t.edges().size() << '\n';
  for (const Edge& e : t.edges()) out << e.u << ' ' << e.v << ' ' << format_real(e.w) << '\n';
}

/// Graph edge list or dense metric, told apart by the header's field count.
enum class InputKind { graph, metric };

inline InputKind detect_input(const std::string& text) {
  std::istringstream in(text);
  detail::LineReader r(in);
  std::vector<std::string> tok;
  if (!r.next(tok)) throw ParseError(1, "empty input");
  if (tok.size() == 2) return InputKind::graph;
  if (tok.size() == 1) return InputKind::metric;
  throw ParseError(r.line(), "header must be 'n m' (graph) or 'n' (metric)");
}

}  // namespace treebed
