// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "dpdsim/scenario.hpp"

namespace dpdsim {

// All writers go through a temp file + rename so partial runs never leave
// truncated artifacts behind. Throws std::runtime_error on I/O failure.
void write_text_atomic(const std::string& path, const std::string& contents);

// header `freq_hz,power_db`, %.6e
std::string psd_csv(const PsdEstimate& psd);
// header `iteration,error_db`
std::string error_history_csv(const std::vector<double>& history);
// flattened ScenarioMetrics, one row per scheme
std::string metrics_csv(const std::vector<SchemeResult>& results);
// header `scheme,K,Q,oob_ratio_db,nmse_db,flops`
std::string comparison_csv(const std::vector<SchemeResult>& results, int shared_memory_depth);
// `re,im` grid
std::string matrix_csv(const arma::cx_mat& m);
// human-readable summary table (scheme, NMSE, complexity)
std::string summary_table(const std::vector<SchemeResult>& results);

struct PsdCsvRow {
  double freq_hz;
  double power_db;
};
std::vector<PsdCsvRow> parse_psd_csv(const std::string& contents);

}  // namespace dpdsim
