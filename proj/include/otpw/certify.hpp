#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "otpw/spectrum.hpp"
#include "otpw/transport.hpp"

namespace otpw {

enum class InequalityId {
  Main,
  Moment,
  Triangle,
  Expedient,
  Nash,
  Pw,
  EigenPw,
  EigenSharp,
  Convexity,      ///< ||f_t||_q against ((1-t)||f0||_q^q + t||f1||_q^q)^{1/q}
  GeodesicSpeed,  ///< |W(mu0, mu_t) - t W(mu0, mu1)| against a relative tolerance
  Scaling,        ///< |slope - target| against 5% of the target
};

std::string_view to_string(InequalityId id);
/// Throws Error{ConfigInvalid}.
InequalityId parse_inequality(std::string_view name);

struct InequalityReport {
  InequalityId id = InequalityId::Main;
  double p = 0.0;
  double q = std::numeric_limits<double>::quiet_NaN();
  double r = std::numeric_limits<double>::quiet_NaN();
  std::string domain;
  std::size_t resolution = 0;
  std::string solver;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  ///< rhs - lhs
  double error_bar = 0.0;
  double runtime_ms = 0.0;
  /// Named auxiliary values (optimal x0, W/diam, sharpness ratio, ...).
  std::vector<std::pair<std::string, double>> details;

  bool passed() const { return slack >= -error_bar; }
  double detail(std::string_view key) const;
};

/// p / (p - q)
double transport_exponent(double p, double q);

/// Throws Error{InvalidArgument} unless 1 < q < p < inf.
void require_exponents(double p, double q);

/// |integral |phi|^{q-2} phi| must not exceed this fraction of integral |phi|^{q-1}.
inline constexpr double kConstraintTolerance = 1e-8;

// Single-resolution checks. Error bars cover solver gaps and roundoff only;
// `certify` adds the resolution-halving part. Fields passed to the
// constrained checks must already satisfy the signed-power constraint
// (Error{ConstraintViolated} otherwise) and change sign (Error{OneSigned}).

InequalityReport check_main(const ScalarField& f, double p, double q, const TransportOptions& transport = {});

/// Infimum over x0 in the domain by nested golden-section search on the
/// convex map x0 -> integral |x - x0|^r |phi|^{q-1}.
InequalityReport check_moment(const ScalarField& f, double p, double q, std::size_t search_steps = 60);

/// Worst case over the given candidate points (atom-major, one point per dim
/// values). An empty candidate list uses 11 points on a diameter segment.
InequalityReport check_triangle_bound(const ScalarField& f, double p, double q, std::span<const double> x0 = {},
                                      const TransportOptions& transport = {});

InequalityReport check_expedient(const ScalarField& phi, const ScalarField& f0, const ScalarField& f1, double p,
                                 double q, const TransportOptions& transport = {});

InequalityReport check_nash(const ScalarField& f, double p, double q, const TransportOptions& transport = {});

/// No constraint needed: the field is shifted by its q-mean internally.
InequalityReport check_pw(const ScalarField& f, double p, double q);

/// {eigen_pw, eigen_sharp} against a Richardson-extrapolated eigenvalue.
std::array<InequalityReport, 2> check_eigen_bound(const ConvexDomain& domain, double p, std::size_t resolution,
                                                  const EigenOptions& options = {});

/// Candidate centres for the triangle bound: `count` points evenly spaced
/// on a segment realizing the diameter.
std::vector<double> diameter_candidates(const ConvexDomain& domain, std::size_t count = 11);

struct MomentMinimum {
  std::vector<double> x0;
  double value = 0.0;
};

/// min over x0 in the domain of sum_i w_i |x_i - x0|^r.
MomentMinimum minimize_moment(const ConvexDomain& domain, std::span<const double> points,
                              std::span<const double> weights, double r, std::size_t search_steps = 60);

/// A field given either as a point function (resampled per resolution) or as
/// fixed node values on one grid.
struct FieldSource {
  PointFunction function;
  std::vector<double> values;
  std::string name;
};

struct CertifyRequest {
  ConvexDomain domain = ConvexDomain::interval(0.0, 1.0);
  FieldSource field;
  double p = 3.0;
  double q = 2.0;
  std::size_t resolution = 64;
  TransportOptions transport;
  std::vector<InequalityId> checks = {InequalityId::Main, InequalityId::Moment, InequalityId::Triangle,
                                      InequalityId::Nash, InequalityId::Pw};
  bool shift = true;     ///< subtract the q-mean before the constrained checks
  bool halving = true;   ///< add |value(r) - value(r/2)| to every error bar
  std::size_t triangle_candidates = 11;
};

/// Runs the requested field checks with one shared transport solve per
/// resolution. Reports come back in the order of `checks`.
std::vector<InequalityReport> certify(const CertifyRequest& request);

struct ExpedientRequest {
  ConvexDomain domain = ConvexDomain::interval(0.0, 1.0);
  PointFunction phi;
  PointFunction f0;
  PointFunction f1;
  double p = 3.0;
  double q = 2.0;
  std::size_t resolution = 64;
  TransportOptions transport;
  bool halving = true;
};

InequalityReport certify_expedient(const ExpedientRequest& request);

struct ScalingReport {
  double p = 0.0;
  double q = 0.0;
  std::vector<std::size_t> n;
  std::vector<double> volume;
  std::vector<double> ratio;  ///< (min_t integral |phi - t|^q)^{p/q} / integral |grad phi|^p
  double slope = 0.0;
  double target = 0.0;        ///< (p - q) / q

  double relative_error() const { return std::abs(slope - target) / std::abs(target); }
};

/// phi = x1 on the boxes [0,1] x [0,1/n]; least-squares slope of log ratio
/// against log volume.
ScalingReport thin_box_scaling(double p, double q, std::span<const std::size_t> n_list, std::size_t resolution = 64);

}  // namespace otpw
