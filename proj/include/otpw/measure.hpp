#pragma once

#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "otpw/field.hpp"

namespace otpw {

/// Finitely supported probability measure. Positions are stored
/// atom-major (atom i occupies positions[i*dim .. i*dim+dim)).
class DiscreteMeasure {
 public:
  /// Weights must be nonnegative and finite and sum to 1 within 1e-12;
  /// throws Error{InvalidArgument} otherwise.
  DiscreteMeasure(std::size_t dim, std::vector<double> positions, std::vector<double> weights);

  /// Normalizes the weights to unit mass. Throws Error{ZeroMass}.
  static DiscreteMeasure normalized(std::size_t dim, std::vector<double> positions,
                                    std::vector<double> weights);

  static DiscreteMeasure dirac(std::span<const double> x);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return weights_.size(); }
  std::span<const double> position(std::size_t i) const { return {positions_.data() + i * dim_, dim_}; }
  std::span<const double> positions() const noexcept { return positions_; }
  std::span<const double> weights() const noexcept { return weights_; }
  double weight(std::size_t i) const { return weights_[i]; }

  /// Atoms shifted by a vector.
  DiscreteMeasure translated(std::span<const double> v) const;

  bool inside(const ConvexDomain& domain, double tol = 1e-12) const;

 private:
  std::size_t dim_;
  std::vector<double> positions_;
  std::vector<double> weights_;
};

/// One atom per cell at the node, weight f * cell volume, normalized.
/// Zero-weight atoms are dropped. Throws Error{ZeroMass} and
/// Error{InvalidArgument} for negative densities.
DiscreteMeasure from_density(const ScalarField& f);

/// sum_i w_i |x_i - x0|^m
double moment(const DiscreteMeasure& mu, double m, std::span<const double> x0);

struct MeasurePair {
  DiscreteMeasure rho0;  ///< from |phi|^{q-2} phi_-
  DiscreteMeasure rho1;  ///< from |phi|^{q-2} phi_+
};

/// Throws Error{OneSigned} if phi does not change sign.
MeasurePair rho_pair(const ScalarField& f, double q);

/// max(| I - 2 P |, | I - 2 N |) with I = int |phi|^{q-1},
/// P = int |phi|^{q-2} phi_+, N = int |phi|^{q-2} phi_-.
double half_mass_check(const ScalarField& f, double q);

/// CSV rows "x1,...,xN,weight" with a header line.
void write_csv(std::ostream& out, const DiscreteMeasure& mu);

}  // namespace otpw
