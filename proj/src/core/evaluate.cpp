#include "core/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iomanip>
#include <set>
#include <sstream>

#include "core/error.hpp"

namespace mc {

std::int64_t block_count(std::span<const double> patch_predictions) {
  double total = 0.0;
  for (double p : patch_predictions) {
    require(!std::isnan(p), ErrorKind::InvalidArgument, "patch prediction is NaN");
    require(p >= 0.0 && std::isfinite(p), ErrorKind::InvalidArgument,
            "patch predictions must be finite and non-negative");
    total += p;
  }
  return static_cast<std::int64_t>(std::floor(total + 0.5));
}

double rcp(double predicted, double ground_truth) {
  require(!std::isnan(predicted) && !std::isnan(ground_truth), ErrorKind::InvalidArgument,
          "RCP inputs must not be NaN");
  require(ground_truth > 0.0, ErrorKind::UndefinedMetric,
          "RCP is undefined for a ground truth of zero");
  return 1.0 - std::abs(predicted - ground_truth) / ground_truth;
}

Report build_report(const std::vector<std::string>& models, const std::vector<BlockInput>& blocks) {
  require(!blocks.empty(), ErrorKind::InvalidArgument, "report needs at least one block");
  std::set<std::string> seen;
  Report rep;
  rep.models = models;
  const std::size_t m = models.size();
  rep.overall.block_id = "overall";
  rep.overall.corrected.assign(m, 0);
  rep.average_corrected_rcp.assign(m, 0.0);
  for (const auto& b : blocks) {
    require(seen.insert(b.block_id).second, ErrorKind::InvalidArgument,
            "duplicate block id '" + b.block_id + "'");
    require(b.corrected.size() == m, ErrorKind::InvalidArgument,
            "block '" + b.block_id + "' has " + std::to_string(b.corrected.size()) +
                " model counts, expected " + std::to_string(m));
    require(b.ground_truth >= 0 && b.local_count >= 0, ErrorKind::InvalidArgument,
            "block '" + b.block_id + "' has a negative count");
    BlockResult r;
    r.block_id = b.block_id;
    r.ground_truth = b.ground_truth;
    r.local_count = b.local_count;
    r.local_rcp = rcp(static_cast<double>(b.local_count), static_cast<double>(b.ground_truth));
    r.corrected = b.corrected;
    for (auto c : b.corrected) {
      require(c >= 0, ErrorKind::InvalidArgument, "block '" + b.block_id + "' has a negative count");
      r.corrected_rcp.push_back(rcp(static_cast<double>(c), static_cast<double>(b.ground_truth)));
    }
    rep.overall.ground_truth += b.ground_truth;
    rep.overall.local_count += b.local_count;
    for (std::size_t k = 0; k < m; ++k) rep.overall.corrected[k] += b.corrected[k];
    rep.rows.push_back(std::move(r));
  }
  const auto gt = static_cast<double>(rep.overall.ground_truth);
  rep.overall.local_rcp = rcp(static_cast<double>(rep.overall.local_count), gt);
  for (std::size_t k = 0; k < m; ++k)
    rep.overall.corrected_rcp.push_back(rcp(static_cast<double>(rep.overall.corrected[k]), gt));

  const auto n = static_cast<double>(rep.rows.size());
  for (const auto& r : rep.rows) {
    rep.average_local_rcp += r.local_rcp / n;
    for (std::size_t k = 0; k < m; ++k) rep.average_corrected_rcp[k] += r.corrected_rcp[k] / n;
  }
  return rep;
}

std::string format_percent(double value) {
  const double pct = value * 100.0;
  char buf[64];
  if (pct >= 99.0) {
    const double hundredths = std::floor(pct * 100.0 + 0.5);
    std::snprintf(buf, sizeof buf, "%.2f", hundredths / 100.0);
    std::string s = buf;
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
    return s + "%";
  }
  std::snprintf(buf, sizeof buf, "%.0f", std::floor(pct + 0.5));
  std::string s = std::string(buf) + "%";
  if (value < 0.0) s += "*";
  return s;
}

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::int64_t parse_int(const std::string& cell, std::size_t line_no, const std::string& column) {
  char* end = nullptr;
  const long long v = std::strtoll(cell.c_str(), &end, 10);
  require(!cell.empty() && end == cell.c_str() + cell.size(), ErrorKind::Parse,
          "row " + std::to_string(line_no) + ": column " + column + " is not an integer: '" + cell + "'");
  return v;
}

double parse_real(const std::string& cell, std::size_t line_no, const std::string& column) {
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  require(!cell.empty() && end == cell.c_str() + cell.size(), ErrorKind::Parse,
          "row " + std::to_string(line_no) + ": column " + column + " is not a number: '" + cell + "'");
  return v;
}

std::vector<std::string> read_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

}  // namespace

std::string render_report_text(const Report& rep) {
  std::vector<std::string> header = {"block", "ground_truth", "local", "rcp"};
  for (const auto& m : rep.models) {
    header.push_back(m);
    header.push_back("rcp");
  }
  std::vector<std::vector<std::string>> table;
  bool negative = false;
  auto pct = [&negative](double v) {
    negative = negative || v < 0.0;
    return format_percent(v);
  };
  auto add_row = [&](const BlockResult& r) {
    std::vector<std::string> row = {r.block_id, std::to_string(r.ground_truth),
                                    std::to_string(r.local_count), pct(r.local_rcp)};
    for (std::size_t k = 0; k < rep.models.size(); ++k) {
      row.push_back(std::to_string(r.corrected[k]));
      row.push_back(pct(r.corrected_rcp[k]));
    }
    table.push_back(std::move(row));
  };
  for (const auto& r : rep.rows) add_row(r);
  add_row(rep.overall);
  std::vector<std::string> avg = {"average_precision", "", "", pct(rep.average_local_rcp)};
  for (double a : rep.average_corrected_rcp) {
    avg.emplace_back();
    avg.push_back(pct(a));
  }
  table.push_back(std::move(avg));

  std::vector<std::size_t> widths(header.size(), 0);
  for (std::size_t c = 0; c < header.size(); ++c) widths[c] = header[c].size();
  for (const auto& row : table)
    for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());

  std::ostringstream os;
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c == 0) os << std::left << std::setw(static_cast<int>(widths[c])) << row[c];
      else os << "  " << std::right << std::setw(static_cast<int>(widths[c])) << row[c];
    }
    os << '\n';
  };
  emit(header);
  std::size_t total = 0;
  for (auto w : widths) total += w + 2;
  os << std::string(total - 2, '-') << '\n';
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (i == rep.rows.size()) os << std::string(total - 2, '-') << '\n';
    emit(table[i]);
  }
  if (negative) os << "* error exceeds 100% of ground truth (RCP below zero)\n";
  return os.str();
}

std::string report_csv(const Report& rep) {
  std::string out = "block_id,ground_truth,local_count,local_rcp";
  for (const auto& m : rep.models) out += "," + m + "_count," + m + "_rcp";
  out += "\n";
  auto row = [&](const BlockResult& r) {
    out += r.block_id + "," + std::to_string(r.ground_truth) + "," + std::to_string(r.local_count) +
           "," + fmt17(r.local_rcp);
    for (std::size_t k = 0; k < rep.models.size(); ++k)
      out += "," + std::to_string(r.corrected[k]) + "," + fmt17(r.corrected_rcp[k]);
    out += "\n";
  };
  for (const auto& r : rep.rows) row(r);
  row(rep.overall);
  out += "average_precision,,," + fmt17(rep.average_local_rcp);
  for (double a : rep.average_corrected_rcp) out += ",," + fmt17(a);
  out += "\n";
  return out;
}

Report parse_report_csv(const std::string& text) {
  const auto lines = read_lines(text);
  require(!lines.empty(), ErrorKind::Parse, "report CSV is empty");
  const auto header = split(lines[0]);
  require(header.size() >= 4 && header[0] == "block_id" && header[1] == "ground_truth" &&
              header[2] == "local_count" && header[3] == "local_rcp" && header.size() % 2 == 0,
          ErrorKind::Parse, "row 1: unexpected report header");
  Report rep;
  for (std::size_t c = 4; c < header.size(); c += 2) {
    const auto& count_col = header[c];
    require(count_col.size() > 6 && count_col.substr(count_col.size() - 6) == "_count",
            ErrorKind::Parse, "row 1: expected a <model>_count column, got '" + count_col + "'");
    const auto name = count_col.substr(0, count_col.size() - 6);
    require(header[c + 1] == name + "_rcp", ErrorKind::Parse,
            "row 1: expected column '" + name + "_rcp'");
    rep.models.push_back(name);
  }
  const std::size_t m = rep.models.size();
  bool have_overall = false, have_average = false;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto cells = split(lines[i]);
    const std::size_t line_no = i + 1;
    require(cells.size() == header.size(), ErrorKind::Parse,
            "row " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) + " columns");
    if (cells[0] == "average_precision") {
      rep.average_local_rcp = parse_real(cells[3], line_no, "local_rcp");
      for (std::size_t k = 0; k < m; ++k)
        rep.average_corrected_rcp.push_back(parse_real(cells[5 + 2 * k], line_no, rep.models[k] + "_rcp"));
      have_average = true;
      continue;
    }
    BlockResult r;
    r.block_id = cells[0];
    r.ground_truth = parse_int(cells[1], line_no, "ground_truth");
    r.local_count = parse_int(cells[2], line_no, "local_count");
    r.local_rcp = parse_real(cells[3], line_no, "local_rcp");
    for (std::size_t k = 0; k < m; ++k) {
      r.corrected.push_back(parse_int(cells[4 + 2 * k], line_no, rep.models[k] + "_count"));
      r.corrected_rcp.push_back(parse_real(cells[5 + 2 * k], line_no, rep.models[k] + "_rcp"));
    }
    if (r.block_id == "overall") {
      rep.overall = std::move(r);
      have_overall = true;
    } else {
      rep.rows.push_back(std::move(r));
    }
  }
  require(have_overall && have_average, ErrorKind::Parse,
          "report CSV lacks the overall or average_precision row");
  return rep;
}

std::vector<BlockInput> parse_block_counts_csv(const std::string& text,
                                               std::vector<std::string>* models) {
  const auto lines = read_lines(text);
  require(!lines.empty(), ErrorKind::Parse, "block counts CSV is empty");
  const auto header = split(lines[0]);
  require(header.size() >= 3 && header[0] == "block_id" && header[1] == "ground_truth" &&
              header[2] == "local_count",
          ErrorKind::Parse, "row 1: expected header block_id,ground_truth,local_count[,<model>_count...]");
  std::vector<std::string> names;
  for (std::size_t c = 3; c < header.size(); ++c) {
    const auto& col = header[c];
    require(col.size() > 6 && col.substr(col.size() - 6) == "_count", ErrorKind::Parse,
            "row 1: expected a <model>_count column, got '" + col + "'");
    names.push_back(col.substr(0, col.size() - 6));
  }
  std::vector<BlockInput> blocks;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto cells = split(lines[i]);
    const std::size_t line_no = i + 1;
    require(cells.size() == header.size(), ErrorKind::Parse,
            "row " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) + " columns");
    BlockInput b;
    b.block_id = cells[0];
    b.ground_truth = parse_int(cells[1], line_no, "ground_truth");
    b.local_count = parse_int(cells[2], line_no, "local_count");
    for (std::size_t c = 3; c < cells.size(); ++c)
      b.corrected.push_back(parse_int(cells[c], line_no, header[c]));
    blocks.push_back(std::move(b));
  }
  if (models) *models = std::move(names);
  return blocks;
}

}  // namespace mc
