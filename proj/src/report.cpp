#include "otpw/report.hpp"

#include <cmath>
#include <json.hpp>
#include <ostream>

#include "otpw/error.hpp"
#include "otpw/format.hpp"

namespace otpw {

namespace {

constexpr std::size_t kColumns = 13;

std::string cell(double v) { return std::isnan(v) ? std::string() : format_double(v); }

double number(std::string_view text, std::string_view column, bool optional = false) {
  if (text.empty() && optional) return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  if (!parse_double(text, v)) {
    throw Error(ErrorCode::ConfigInvalid, "bad value '" + std::string(text) + "' in column " + std::string(column));
  }
  return v;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

}  // namespace

std::string_view csv_header() {
  return "experiment_id,inequality_id,p,q,r,domain,resolution,solver,lhs,rhs,slack,error_bar,runtime_ms";
}

std::string format_row(const ReportRow& row) {
  const auto& r = row.report;
  std::string s;
  s.reserve(160);
  s += row.experiment_id;
  s += ',';
  s += to_string(r.id);
  for (double v : {r.p, r.q, r.r}) {
    s += ',';
    s += cell(v);
  }
  s += ',';
  s += r.domain;
  s += ',';
  s += std::to_string(r.resolution);
  s += ',';
  s += r.solver;
  for (double v : {r.lhs, r.rhs, r.slack, r.error_bar, r.runtime_ms}) {
    s += ',';
    s += cell(v);
  }
  return s;
}

ReportRow parse_row(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  const auto cells = split(line);
  if (cells.size() != kColumns) {
    throw Error(ErrorCode::ConfigInvalid, "expected " + std::to_string(kColumns) + " columns, got " +
                                              std::to_string(cells.size()));
  }
  ReportRow row;
  row.experiment_id = std::string(cells[0]);
  auto& r = row.report;
  r.id = parse_inequality(cells[1]);
  r.p = number(cells[2], "p", true);
  r.q = number(cells[3], "q", true);
  r.r = number(cells[4], "r", true);
  r.domain = std::string(cells[5]);
  const double res = number(cells[6], "resolution");
  if (!(res >= 0.0) || res != std::floor(res)) throw Error(ErrorCode::ConfigInvalid, "bad resolution");
  r.resolution = static_cast<std::size_t>(res);
  r.solver = std::string(cells[7]);
  r.lhs = number(cells[8], "lhs");
  r.rhs = number(cells[9], "rhs");
  r.slack = number(cells[10], "slack");
  r.error_bar = number(cells[11], "error_bar");
  r.runtime_ms = number(cells[12], "runtime_ms");
  return row;
}

void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows) {
  out << csv_header() << '\n';
  for (const auto& row : rows) out << format_row(row) << '\n';
}

std::string detail_record(const ReportRow& row) {
  const auto& r = row.report;
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  nlohmann::ordered_json j;
  j["experiment_id"] = row.experiment_id;
  j["inequality_id"] = std::string(to_string(r.id));
  j["p"] = num(r.p);
  j["q"] = num(r.q);
  j["r"] = num(r.r);
  j["domain"] = r.domain;
  j["resolution"] = r.resolution;
  j["solver"] = r.solver;
  j["lhs"] = num(r.lhs);
  j["rhs"] = num(r.rhs);
  j["slack"] = num(r.slack);
  j["error_bar"] = num(r.error_bar);
  j["runtime_ms"] = num(r.runtime_ms);
  j["passed"] = r.passed();
  nlohmann::ordered_json details = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.details) details[k] = num(v);
  j["details"] = std::move(details);
  return j.dump();
}

}  // namespace otpw
