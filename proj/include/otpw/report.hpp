#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "otpw/certify.hpp"

namespace otpw {

/// One CSV line: a report tagged with the experiment that produced it.
struct ReportRow {
  std::string experiment_id;
  InequalityReport report;
};

/// experiment_id,inequality_id,p,q,r,domain,resolution,solver,lhs,rhs,slack,error_bar,runtime_ms
std::string_view csv_header();

/// Shortest round-trip decimals; NaN q and r become empty cells.
std::string format_row(const ReportRow& row);

/// Inverse of format_row (details are not part of the CSV).
/// Throws Error{ConfigInvalid} on a malformed line.
ReportRow parse_row(std::string_view line);

void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows);

/// Single-line JSON record with every CSV field plus the named details.
std::string detail_record(const ReportRow& row);

}  // namespace otpw
