#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "proxista/analysis.hpp"
#include "proxista/error.hpp"
#include "proxista/linop.hpp"
#include "proxista/solver.hpp"

namespace proxista::io {

/// Shortest round-trip decimal representation; identical bytes for identical doubles.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
    text.remove_suffix(1);
  double v = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw InvalidArgument("csv: cannot parse number '" + std::string(text) + "'");
  return v;
}

/// Row-major numeric table from comma-separated text without a header.
/// Blank lines are skipped; every row must have the same width.
inline Matrix parse_csv_matrix(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      row.push_back(parse_double(rest.substr(0, comma)));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ShapeError("csv: ragged rows (" + std::to_string(row.size()) + " vs " +
                       std::to_string(rows.front().size()) + " columns)");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ShapeError("csv: no data");
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  return m;
}

inline Matrix load_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("csv: cannot open " + path);
  return parse_csv_matrix(in);
}

/// A single row or a single column, flattened.
inline std::vector<double> load_csv_vector(const std::string& path) {
  const Matrix m = load_csv_matrix(path);
  if (m.rows() != 1 && m.cols() != 1)
    throw ShapeError("csv: expected a single row or column in " + path);
  std::vector<double> out(static_cast<std::size_t>(m.size()));
  for (Index i = 0; i < m.size(); ++i) out[static_cast<std::size_t>(i)] = m.data()[i];
  return out;
}

inline LinearMap load_dense_map(const std::string& path) { return make_dense(load_csv_matrix(path)); }

/// Trace CSV: `iter,cost,fp_residual,dist_to_ref,elapsed_s`. dist_to_ref is
/// empty without a reference; elapsed_s is empty unless `with_timing`.
inline void write_trace_csv(std::ostream& out, const SolveTrace& trace, bool with_timing) {
  out << "iter,cost,fp_residual,dist_to_ref,elapsed_s\n";
  for (std::size_t k = 0; k < trace.size(); ++k) {
    out << k << ',' << format_double(trace.cost[k]) << ',' << format_double(trace.fp_residual[k])
        << ',';
    if (trace.has_reference) out << format_double(trace.dist_to_ref[k]);
    out << ',';
    if (with_timing) out << format_double(trace.elapsed_s[k]);
    out << '\n';
  }
}

inline void write_vector_csv(std::ostream& out, const std::vector<std::string>& header,
                             const std::vector<std::vector<double>>& columns) {
  for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  out << '\n';
  const std::size_t n = columns.empty() ? 0 : columns.front().size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < columns.size(); ++j)
      out << (j ? "," : "") << format_double(columns[j][i]);
    out << '\n';
  }
}

inline std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

inline nlohmann::json to_json(const PropertyReport& rep) {
  auto num = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return format_double(v);
  };
  nlohmann::json j;
  j["property"] = rep.property;
  j["trials"] = rep.trials;
  j["seed"] = rep.seed;
  j["worst"] = num(rep.worst);
  j["witness_a"] = to_std(rep.witness_a);
  j["witness_b"] = to_std(rep.witness_b);
  j["verdict"] = rep.pass ? "pass" : "fail";
  j["tolerance"] = rep.tolerance;
  if (!rep.detail.empty()) j["detail"] = rep.detail;
  return j;
}

} // namespace proxista::io
