#pragma once

// Text formats used by the command-line tool: the result CSV and the
// plain-text matrix list.
//
// Matrix list: a header line "p k n" followed by n blocks of p rows. Rows have
// k entries for Stiefel samples and p entries for Grassmann projectors.
// Blank lines and lines starting with '#' are ignored.

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "rlmean/errors.hpp"
#include "rlmean/linalg.hpp"
#include "rlmean/simulation.hpp"

namespace rlmean {

/// Malformed text input.
class ParseError : public InvalidArgument {
public:
  using InvalidArgument::InvalidArgument;
};

/// printf-style "%.<digits>g"; NaN becomes an empty field.
inline std::string format_number(double v, int digits = 12) {
  if (std::isnan(v))
    return {};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

/// 20 log10(x), the decibel scale of the error plots.
inline double to_db(double x) { return 20.0 * std::log10(x); }

/// Column names: "n", then E_median, E_q10, E_q90 per estimator, then
/// E_failures for every estimator that failed at least once.
inline std::vector<std::string> csv_header(const ResultTable &table) {
  std::vector<std::string> cols{"n"};
  for (const auto &e : table.estimators) {
    cols.push_back(e + "_median");
    cols.push_back(e + "_q10");
    cols.push_back(e + "_q90");
  }
  for (std::size_t e = 0; e < table.estimators.size(); ++e) {
    for (const auto &row : table.summary) {
      if (row[e].failures > 0) {
        cols.push_back(table.estimators[e] + "_failures");
        break;
      }
    }
  }
  return cols;
}

inline void write_csv(std::ostream &out, const ResultTable &table,
                      bool db = false) {
  const auto header = csv_header(table);
  for (std::size_t i = 0; i < header.size(); ++i)
    out << (i ? "," : "") << header[i];
  out << '\n';

  std::vector<bool> failure_column(table.estimators.size(), false);
  for (std::size_t e = 0; e < table.estimators.size(); ++e)
    for (const auto &row : table.summary)
      failure_column[e] = failure_column[e] || row[e].failures > 0;

  auto stat = [db](double v) { return format_number(db ? to_db(v) : v); };
  for (std::size_t r = 0; r < table.n_values.size(); ++r) {
    out << table.n_values[r];
    for (const auto &cell : table.summary[r])
      out << ',' << stat(cell.median) << ',' << stat(cell.q10) << ','
          << stat(cell.q90);
    for (std::size_t e = 0; e < table.estimators.size(); ++e)
      if (failure_column[e])
        out << ',' << table.summary[r][e].failures;
    out << '\n';
  }
}

inline std::string csv_string(const ResultTable &table, bool db = false) {
  std::ostringstream out;
  write_csv(out, table, db);
  return out.str();
}

struct MatrixList {
  int p = 0;
  int k = 0;
  std::vector<Matrix> blocks;
};

namespace detail {

// Next line that is neither blank nor a comment. Returns false at EOF.
inline bool next_content_line(std::istream &in, std::string &line,
                              int &line_no) {
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#')
      continue;
    return true;
  }
  return false;
}

inline std::vector<double> parse_reals(const std::string &line, int line_no) {
  std::istringstream ss(line);
  std::vector<double> out;
  std::string tok;
  while (ss >> tok) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception &) {
      used = 0;
    }
    if (used != tok.size())
      throw ParseError("line " + std::to_string(line_no) +
                       ": not a number: '" + tok + "'");
    if (!std::isfinite(v))
      throw ParseError("line " + std::to_string(line_no) +
                       ": non-finite entry");
    out.push_back(v);
  }
  return out;
}

} // namespace detail

/// Reads a matrix list. Blocks have `square ? p : k` columns.
inline MatrixList read_matrix_list(std::istream &in, bool square) {
  std::string line;
  int line_no = 0;
  if (!detail::next_content_line(in, line, line_no))
    throw ParseError("missing header line 'p k n'");

  std::istringstream hs(line);
  long p = 0, k = 0, n = 0;
  std::string extra;
  if (!(hs >> p >> k >> n) || (hs >> extra) || p < 1 || k < 1 || k > p ||
      n < 1)
    throw ParseError("line " + std::to_string(line_no) +
                     ": header must be 'p k n' with 1 <= k <= p and n >= 1");

  MatrixList out;
  out.p = static_cast<int>(p);
  out.k = static_cast<int>(k);
  const long cols = square ? p : k;
  out.blocks.reserve(static_cast<std::size_t>(n));
  for (long b = 0; b < n; ++b) {
    Matrix m(p, cols);
    for (long r = 0; r < p; ++r) {
      if (!detail::next_content_line(in, line, line_no))
        throw ParseError("block " + std::to_string(b) +
                         ": unexpected end of input at row " +
                         std::to_string(r));
      const auto vals = detail::parse_reals(line, line_no);
      if (static_cast<long>(vals.size()) != cols)
        throw ParseError("line " + std::to_string(line_no) + " (block " +
                         std::to_string(b) + "): expected " +
                         std::to_string(cols) + " entries, got " +
                         std::to_string(vals.size()));
      for (long c = 0; c < cols; ++c)
        m(r, c) = vals[static_cast<std::size_t>(c)];
    }
    out.blocks.push_back(std::move(m));
  }
  if (detail::next_content_line(in, line, line_no))
    throw ParseError("line " + std::to_string(line_no) +
                     ": trailing data after " + std::to_string(n) + " blocks");
  return out;
}

/// Writes one block in matrix-list format with round-trip precision.
inline void write_matrix_block(std::ostream &out, const Matrix &m, int p,
                               int k) {
  out << p << ' ' << k << " 1\n";
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      out << (c ? " " : "") << format_number(m(r, c), 17);
    out << '\n';
  }
}

} // namespace rlmean
