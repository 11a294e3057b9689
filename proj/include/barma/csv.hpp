#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "barma/math.hpp"
#include "barma/model.hpp"

namespace barma::io {

/// Serialize with 17 significant digits so values round-trip exactly.
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

struct SeriesData {
  ObservationSeries series;
  CovariateMatrix covariates;
  std::string response_name;
  std::vector<std::string> covariate_names;
};

/// Load a response series plus optional covariates from a headered CSV:
/// first column is the response (one time step per row, chronological),
/// remaining columns are covariates. Values outside (0,1) in the response
/// column are a domain error naming the offending rows.
inline SeriesData load_series(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("load_series: cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line))
    throw std::invalid_argument("load_series: '" + path + "' is empty");
  const auto header = split_csv_line(line);
  if (header.empty() || header[0].empty())
    throw std::invalid_argument("load_series: missing header row in '" + path + "'");

  const std::size_t n_cols = header.size();
  std::vector<double> y;
  std::vector<double> x;
  std::vector<std::size_t> bad_rows;
  std::size_t line_no = 1;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    ++row;
    const auto fields = split_csv_line(line);
    if (fields.size() != n_cols)
      throw std::invalid_argument("load_series: line " + std::to_string(line_no) + " has " +
                                  std::to_string(fields.size()) + " fields, expected " +
                                  std::to_string(n_cols));
    std::vector<double> parsed(n_cols);
    for (std::size_t j = 0; j < n_cols; ++j) {
      try {
        std::size_t consumed = 0;
        parsed[j] = std::stod(fields[j], &consumed);
        if (consumed != fields[j].size()) throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        throw std::invalid_argument("load_series: line " + std::to_string(line_no) +
                                    ": cannot parse '" + fields[j] + "' as a number");
      }
    }
    if (!(parsed[0] > 0.0 && parsed[0] < 1.0)) bad_rows.push_back(row);
    y.push_back(parsed[0]);
    for (std::size_t j = 1; j < n_cols; ++j) x.push_back(parsed[j]);
  }
  if (y.empty()) throw std::invalid_argument("load_series: no data rows in '" + path + "'");
  if (!bad_rows.empty()) {
    std::string rows;
    for (std::size_t i = 0; i < bad_rows.size(); ++i)
      rows += (i ? ", " : "") + std::to_string(bad_rows[i]);
    throw std::domain_error("load_series: response outside (0,1) at row" +
                            std::string(bad_rows.size() > 1 ? "s " : " ") + rows);
  }

  SeriesData data{ObservationSeries(std::move(y)),
                  CovariateMatrix(row, n_cols - 1, std::move(x)),
                  header[0],
                  {header.begin() + 1, header.end()}};
  return data;
}

/// Write one CSV row of doubles after an optional leading label column.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : out_(path) {
    if (!out_) throw std::invalid_argument("CsvWriter: cannot open '" + path + "' for writing");
  }

  void header(const std::vector<std::string>& names) { write_strings(names); }

  void row(const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) out_ << ',';
      out_ << format_double(values[i]);
    }
    out_ << '\n';
  }

  void mixed_row(const std::vector<std::string>& fields) { write_strings(fields); }

 private:
  void write_strings(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      out_ << fields[i];
    }
    out_ << '\n';
  }

  std::ofstream out_;
};

inline double quantile_sorted(const std::vector<double>& sorted, double p) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const std::size_t lo = static_cast<std::size_t>(h);
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

/// Gaussian kernel density estimate on a regular grid (Silverman's rule),
/// emitted for plotting without any graphics dependency.
struct DensityGrid {
  std::vector<double> x;
  std::vector<double> density;
};

inline DensityGrid kernel_density(std::vector<double> sample, std::size_t grid_size = 128) {
  if (sample.size() < 2) throw std::invalid_argument("kernel_density: need at least 2 points");
  std::sort(sample.begin(), sample.end());
  const std::size_t n = sample.size();
  double mean = 0.0;
  for (double v : sample) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : sample) ss += sqr(v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  const double iqr = quantile_sorted(sample, 0.75) - quantile_sorted(sample, 0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) spread = sd > 0.0 ? sd : 1.0;
  const double bw = 0.9 * spread * std::pow(static_cast<double>(n), -0.2);

  DensityGrid grid;
  grid.x.resize(grid_size);
  grid.density.resize(grid_size);
  const double lo = sample.front() - 3.0 * bw;
  const double hi = sample.back() + 3.0 * bw;
  const double norm = 1.0 / (static_cast<double>(n) * bw * std::sqrt(2.0 * std::numbers::pi));
  for (std::size_t g = 0; g < grid_size; ++g) {
    const double xg = lo + (hi - lo) * static_cast<double>(g) / static_cast<double>(grid_size - 1);
    double acc = 0.0;
    for (double v : sample) acc += std::exp(-0.5 * sqr((xg - v) / bw));
    grid.x[g] = xg;
    grid.density[g] = norm * acc;
  }
  return grid;
}

}  // namespace barma::io
