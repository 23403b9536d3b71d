#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "otpw/field.hpp"

namespace otpw {

struct EigenOptions {
  std::size_t max_iterations = 20000;
  std::size_t stall_window = 50;
  double stall_tolerance = 1e-10;
};

struct EigenResult {
  double p = 2.0;
  double eigenvalue = 0.0;
  ScalarField eigenfunction;     ///< ||u||_{L^p} = 1, integral |u|^{p-2} u = 0
  double constraint_residual = 0.0;
  double residual = 0.0;         ///< relative eigen-equation residual (p = 2) or last relative decrease
  std::vector<double> history;   ///< quotient per iteration
  std::size_t resolution = 0;
  std::size_t iterations = 0;
};

/// First nontrivial Neumann eigenvalue of the p-Laplacian on a grid.
/// p = 2: two-point flux Laplacian with zero-flux faces, solved by block
/// shifted inverse iteration with constants deflated. Other p: descent on
/// the shift-invariant quotient E(u) / min_t integral |u - t|^p, where E is
/// the p-energy of the piecewise linear interpolant on lattice edges (1D)
/// or lattice triangles (2D), preconditioned by the linearized p-Laplacian.
/// Throws Error{NoConvergence}.
EigenResult neumann_eigenvalue(const GridPtr& grid, double p, const EigenOptions& options = {});

struct EigenEstimate {
  double eigenvalue = 0.0;  ///< Richardson value from the three finest levels
  double error_bar = 0.0;
  double order = 0.0;       ///< observed convergence order, 0 if not monotone
  std::vector<EigenResult> levels;  ///< resolutions r/4, r/2, r
};

/// Solves at resolution/4, resolution/2 and resolution and extrapolates.
/// The error bar is the larger of the last refinement step and the
/// extrapolation correction.
EigenEstimate estimate_eigenvalue(const ConvexDomain& domain, double p, std::size_t resolution,
                                  const EigenOptions& options = {});

/// 2 pi (p-1)^{1/p} / (p sin(pi/p))
double pi_p(double p);

/// "resolution,p,eigenvalue,residual,iterations" rows with a header line.
void write_eigen_csv(std::ostream& out, std::span<const EigenResult> results);

}  // namespace otpw
