// SPDX-License-Identifier: Apache-2.0

#include "dpdsim/csvio.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dpdsim {

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

}  // namespace

void write_text_atomic(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for write: " + tmp);
    out << contents;
    if (!out.good()) throw std::runtime_error("write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("rename failed: " + tmp + " -> " + path);
}

std::string psd_csv(const PsdEstimate& psd) {
  std::string s = "freq_hz,power_db\n";
  for (arma::uword i = 0; i < psd.freqs_hz.n_elem; ++i)
    s += fmt("%.6e", psd.freqs_hz(i)) + "," + fmt("%.6e", psd.power_db(i)) + "\n";
  return s;
}

std::string error_history_csv(const std::vector<double>& history) {
  std::string s = "iteration,error_db\n";
  for (size_t i = 0; i < history.size(); ++i)
    s += std::to_string(i + 1) + "," + fmt("%.2f", history[i]) + "\n";
  return s;
}

std::string metrics_csv(const std::vector<SchemeResult>& results) {
  std::string s =
      "scheme,K,Q,antenna_nmse_mean_db,antenna_nmse_max_db,user_nmse_mean_db,"
      "user_nmse_max_db,oob_ratio_db,flops,iterations,converged\n";
  for (const auto& r : results) {
    const auto& m = r.metrics;
    s += r.spec.tag() + "," +
         (r.spec.kind == SchemeKind::NoDpd ? "0" : std::to_string(r.spec.order)) + "," +
         std::to_string(m.flops.memory_depth) + "," + fmt("%.2f", m.antenna_nmse_mean_db) + "," +
         fmt("%.2f", m.antenna_nmse_max_db) + "," + fmt("%.2f", m.user_nmse_mean_db) + "," +
         fmt("%.2f", m.user_nmse_max_db) + "," + fmt("%.2f", m.oob_ratio_db) + "," +
         std::to_string(m.flops.flops) + "," + std::to_string(m.iterations_used) + "," +
         (m.converged ? "1" : "0") + "\n";
  }
  return s;
}

std::string comparison_csv(const std::vector<SchemeResult>& results, int shared_memory_depth) {
  std::string s = "scheme,K,Q,oob_ratio_db,nmse_db,flops\n";
  for (const auto& r : results) {
    const int k = r.spec.kind == SchemeKind::NoDpd ? 0 : r.spec.order;
    const int q = r.spec.kind == SchemeKind::NoDpd
                      ? shared_memory_depth
                      : r.spec.memory_depth.value_or(shared_memory_depth);
    s += r.spec.tag() + "," + std::to_string(k) + "," + std::to_string(q) + "," +
         fmt("%.2f", r.metrics.oob_ratio_db) + "," + fmt("%.2f", r.metrics.antenna_nmse_mean_db) +
         "," + std::to_string(r.metrics.flops.flops) + "\n";
  }
  return s;
}

std::string matrix_csv(const arma::cx_mat& m) {
  std::string s;
  char buf[80];
  for (arma::uword i = 0; i < m.n_rows; ++i) {
    for (arma::uword j = 0; j < m.n_cols; ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g", m(i, j).real(), m(i, j).imag());
      s += buf;
      s += (j + 1 < m.n_cols) ? "," : "";
    }
    s += "\n";
  }
  return s;
}

std::string summary_table(const std::vector<SchemeResult>& results) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof(line), "%-18s %14s %14s %12s %10s\n", "scheme",
                "antenna NMSE", "user NMSE", "OOB ratio", "FLOPs");
  os << line;
  os << std::string(72, '-') << "\n";
  for (const auto& r : results) {
    std::snprintf(line, sizeof(line), "%-18s %11.2f dB %11.2f dB %9.2f dB %10lld\n",
                  r.spec.tag().c_str(), r.metrics.antenna_nmse_mean_db,
                  r.metrics.user_nmse_mean_db, r.metrics.oob_ratio_db, r.metrics.flops.flops);
    os << line;
  }
  return os.str();
}

std::vector<PsdCsvRow> parse_psd_csv(const std::string& contents) {
  std::istringstream is(contents);
  std::string line;
  if (!std::getline(is, line) || line != "freq_hz,power_db")
    throw std::runtime_error("parse_psd_csv: bad header");
  std::vector<PsdCsvRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    PsdCsvRow row{};
    if (std::sscanf(line.c_str(), "%lg,%lg", &row.freq_hz, &row.power_db) != 2)
      throw std::runtime_error("parse_psd_csv: bad row: " + line);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace dpdsim
