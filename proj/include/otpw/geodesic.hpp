#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "otpw/transport.hpp"

namespace otpw {

struct GeodesicSample {
  double t = 0.0;
  DiscreteMeasure measure;
  std::optional<ScalarField> density;
};

/// McCann interpolation: the mass gamma_ij travels to (1-t) x_i + t y_j.
/// Atoms landing on the same point are merged. Throws Error{BadTime}
/// outside [0, 1].
GeodesicSample displacement_interpolate(const TransportPlan& plan, double t);

struct DensityInterpolant {
  ScalarField density;
  double mass_drift = 0.0;  ///< |mass - 1| before any renormalization
  bool renormalized = false;
};

/// Density of the 1D displacement interpolant between two cell-wise constant
/// densities. Both inputs are normalized to unit mass first. On every piece
/// where both densities are constant the monotone map is affine, so the
/// interpolant is constant there with density 1/((1-t)/f0 + t/f1); the pieces
/// are deposited onto `out` (default: the hull of both supports) by exact
/// overlap. Throws Error{DegenerateCDF} for negative samples and
/// Error{ZeroMass} for densities without mass.
DensityInterpolant interpolant_density_1d(const ScalarField& f0, const ScalarField& f1, double t,
                                          GridPtr out = nullptr);

/// ||f||_{L^q} = (integral f^q)^{1/q}
double lq_norm(const ScalarField& f, double q);

struct ConvexityReport {
  double max_violation = 0.0;
  std::vector<double> times;
  std::vector<double> violations;  ///< ||f_t||_q - ((1-t)||f0||_q^q + t||f1||_q^q)^{1/q}
  double max_mass_drift = 0.0;
};

ConvexityReport lq_convexity_check(const ScalarField& f0, const ScalarField& f1, double q,
                                   std::span<const double> times, GridPtr out = nullptr);

/// "t,x1,...,xN,weight" rows with a header line.
void write_geodesic_csv(std::ostream& out, std::span<const GeodesicSample> samples);

}  // namespace otpw
