#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mc {

// Block total from real-valued patch predictions, rounded half-up.
std::int64_t block_count(std::span<const double> patch_predictions);

// Relative counting precision: 1 - |predicted - truth| / truth. Not clamped;
// negative when the error exceeds the truth.
double rcp(double predicted, double ground_truth);

struct BlockInput {
  std::string block_id;
  std::int64_t ground_truth = 0;
  std::int64_t local_count = 0;
  std::vector<std::int64_t> corrected;  // one per report model column
};

struct BlockResult {
  std::string block_id;
  std::int64_t ground_truth = 0;
  std::int64_t local_count = 0;
  double local_rcp = 0.0;
  std::vector<std::int64_t> corrected;
  std::vector<double> corrected_rcp;

  friend bool operator==(const BlockResult&, const BlockResult&) = default;
};

struct Report {
  std::vector<std::string> models;  // column names, e.g. linear, svr
  std::vector<BlockResult> rows;
  BlockResult overall;              // from summed counts
  double average_local_rcp = 0.0;   // unweighted mean of row RCPs
  std::vector<double> average_corrected_rcp;

  friend bool operator==(const Report&, const Report&) = default;
};

Report build_report(const std::vector<std::string>& models, const std::vector<BlockInput>& blocks);

// Half-up integer percent; two decimals (trailing zeros trimmed) once the
// value reaches 99%. Negative values carry a trailing '*'.
std::string format_percent(double rcp);

std::string render_report_text(const Report& report);
std::string report_csv(const Report& report);
Report parse_report_csv(const std::string& text);

// Block counts table: block_id,ground_truth,local_count[,<model>_count...]
std::vector<BlockInput> parse_block_counts_csv(const std::string& text,
                                               std::vector<std::string>* models);

}  // namespace mc
