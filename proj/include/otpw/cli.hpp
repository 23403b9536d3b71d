#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "otpw/certify.hpp"
#include "otpw/report.hpp"

namespace otpw::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kViolation = 2, kSolverFailure = 3 };

/// An exponent entry of a sweep grid: a number, or "p-<c>" relative to p.
struct ExponentSpec {
  double value = 0.0;
  bool relative_to_p = false;

  double resolve(double p) const { return relative_to_p ? p - value : value; }
};

struct FieldSpec {
  enum class Kind { Expression, Polynomial, Csv } kind = Kind::Expression;
  std::string expression = "x - 0.5";
  int degree = 3;
  std::optional<std::uint64_t> seed;  ///< default: the experiment seed
  std::string csv_path;
};

struct ExperimentConfig {
  std::string experiment_id;
  DomainDescription domain = IntervalDescription{0.0, 1.0};
  FieldSpec field;
  std::vector<double> p_values = {3.0};
  std::vector<ExponentSpec> q_values = {{2.0, false}};
  SolverKind solver = SolverKind::Auto;
  std::vector<std::size_t> resolutions;  ///< empty: per-subcommand default
  std::uint64_t seed = 1;
  std::size_t instances = 1;             ///< random fields per (p, q) in a sweep
  std::vector<std::size_t> n_values = {1, 2, 4, 8, 16};
  std::optional<std::string> density0;
  std::optional<std::string> density1;
  std::vector<double> times;             ///< empty: 0, 0.1, ..., 1
  std::optional<double> exponent;        ///< transport exponent for the geodesic speed check
  std::vector<InequalityId> checks;      ///< empty: all single-field checks
};

/// Parses a JSON config. Unknown keys and malformed values throw
/// Error{ConfigInvalid}; `subcommand` selects which exponent rule applies
/// (1 < q < p for the inequality families, p > 1 for eigen).
ExperimentConfig parse_config(std::string_view json_text, std::string_view subcommand);

std::string version_info();
std::string tolerances_text();
std::string schema_text();

struct RunResult {
  std::vector<ReportRow> rows;
  std::vector<std::string> errors;
  int exit_code = kOk;
};

/// Runs one subcommand on a parsed config. Rows are sorted by experiment
/// key; runtime_ms is zeroed unless `timing` is set.
RunResult execute(std::string_view subcommand, const ExperimentConfig& config, bool timing = false);

/// Full command line entry point (argv[0] excluded).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace otpw::cli
