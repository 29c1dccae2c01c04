#pragma once

#include <Eigen/Dense>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fosmpc/errors.hpp"
#include "fosmpc/trace.hpp"

namespace fosmpc {

// All floating values are printed with 12 significant digits, enough for the
// written CSVs to re-ingest losslessly at that precision and for repeated
// runs to produce byte-identical files.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

// splits on commas, keeping empty fields (including a trailing one)
inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

inline bool parse_double(const std::string& field, double& out) {
  const char* first = field.data();
  const char* last = field.data() + field.size();
  const auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last && !field.empty();
}

}  // namespace detail

// Trace CSV schema: t, x1..xn, u1..u_nu, d1..dn, event. The event field is
// empty or a label; multiple events on one step are joined with ';'.
inline void write_trace_csv(const std::string& path, const SimulationTrace& trace) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write trace CSV: " + path);
  const Eigen::Index n = trace.states.cols();
  const Eigen::Index n_u = trace.inputs.cols();
  out << "t";
  for (Eigen::Index i = 1; i <= n; ++i) out << ",x" << i;
  for (Eigen::Index i = 1; i <= n_u; ++i) out << ",u" << i;
  for (Eigen::Index i = 1; i <= n; ++i) out << ",d" << i;
  out << ",event\n";

  std::map<Eigen::Index, std::string> labels;
  for (const auto& [step, label] : trace.events) {
    auto& slot = labels[step];
    if (!slot.empty()) slot += ';';
    slot += label;
  }
  for (Eigen::Index k = 0; k < trace.steps(); ++k) {
    out << format_double(static_cast<double>(k) * trace.dt);
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << format_double(trace.states(k, i));
    for (Eigen::Index i = 0; i < n_u; ++i) out << ',' << format_double(trace.inputs(k, i));
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << format_double(trace.disturbances(k, i));
    out << ',';
    const auto it = labels.find(k);
    if (it != labels.end()) out << it->second;
    out << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

inline SimulationTrace read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read trace CSV: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty trace CSV: " + path);
  const std::vector<std::string> header = detail::split_csv_line(line);
  Eigen::Index n = 0, n_u = 0;
  for (const std::string& name : header) {
    if (!name.empty() && name[0] == 'x') ++n;
    if (!name.empty() && name[0] == 'u') ++n_u;
  }
  if (header.size() != static_cast<std::size_t>(2 * n + n_u + 2))
    throw DataError("unrecognized trace CSV header: " + path);

  std::vector<std::vector<double>> rows;
  SimulationTrace trace;
  std::vector<double> times;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const std::vector<std::string> fields = detail::split_csv_line(line);
    if (fields.size() != header.size())
      throw DataError(path + ": row " + std::to_string(line_no) + " has wrong field count");
    std::vector<double> row(fields.size() - 1);
    for (std::size_t c = 0; c + 1 < fields.size(); ++c) {
      if (!detail::parse_double(fields[c], row[c]))
        throw DataError(path + ": parse error at row " + std::to_string(line_no) + " col " +
                        std::to_string(c + 1));
    }
    const std::string& label = fields.back();
    if (!label.empty()) {
      std::stringstream ss(label);
      std::string part;
      while (std::getline(ss, part, ';'))
        trace.events.emplace_back(static_cast<Eigen::Index>(rows.size()), part);
    }
    times.push_back(row[0]);
    rows.push_back(std::move(row));
  }
  const Eigen::Index T = static_cast<Eigen::Index>(rows.size());
  if (T == 0) throw DataError("trace CSV has no data rows: " + path);
  trace.dt = T > 1 ? times[1] - times[0] : 1.0 / 160.0;
  trace.states.resize(T, n);
  trace.inputs.resize(T, n_u);
  trace.disturbances.resize(T, n);
  for (Eigen::Index k = 0; k < T; ++k) {
    const auto& row = rows[static_cast<std::size_t>(k)];
    for (Eigen::Index i = 0; i < n; ++i) trace.states(k, i) = row[static_cast<std::size_t>(1 + i)];
    for (Eigen::Index i = 0; i < n_u; ++i)
      trace.inputs(k, i) = row[static_cast<std::size_t>(1 + n + i)];
    for (Eigen::Index i = 0; i < n; ++i)
      trace.disturbances(k, i) = row[static_cast<std::size_t>(1 + n + n_u + i)];
  }
  return trace;
}

// Multichannel sample matrix: rows are samples, columns are channels, header
// row optional (skipped when its first row does not parse as numbers).
inline Eigen::MatrixXd ingest_eeg_csv(const std::string& path, Eigen::Index expected_channels) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read data CSV: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  bool first_content_line = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const std::vector<std::string> fields = detail::split_csv_line(line);
    std::vector<double> row(fields.size());
    bool all_numeric = true;
    std::size_t bad_col = 0;
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (!detail::parse_double(fields[c], row[c])) {
        all_numeric = false;
        bad_col = c + 1;
        break;
      }
    }
    if (!all_numeric) {
      if (first_content_line) {  // header row
        first_content_line = false;
        continue;
      }
      throw DataError(path + ": parse error at row " + std::to_string(line_no) + " col " +
                      std::to_string(bad_col));
    }
    first_content_line = false;
    if (static_cast<Eigen::Index>(row.size()) != expected_channels)
      throw DataError(path + ": row " + std::to_string(line_no) + " has " +
                      std::to_string(row.size()) + " columns, expected " +
                      std::to_string(expected_channels));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("no data rows in: " + path);
  Eigen::MatrixXd data(static_cast<Eigen::Index>(rows.size()), expected_channels);
  for (Eigen::Index k = 0; k < data.rows(); ++k)
    for (Eigen::Index c = 0; c < expected_channels; ++c)
      data(k, c) = rows[static_cast<std::size_t>(k)][static_cast<std::size_t>(c)];
  return data;
}

inline void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m,
                             const std::vector<std::string>& headers = {}) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write CSV: " + path);
  if (!headers.empty()) {
    for (std::size_t i = 0; i < headers.size(); ++i) out << (i ? "," : "") << headers[i];
    out << '\n';
  }
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      out << (c ? "," : "") << format_double(m(r, c));
    out << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

}  // namespace fosmpc
