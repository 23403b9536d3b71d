#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "otpw/domain.hpp"

namespace otpw {

using PointFunction = std::function<double(std::span<const double>)>;

/// Grid-sampled real function, one value per grid node.
class ScalarField {
 public:
  /// Throws Error{InvalidArgument} on a size mismatch or non-finite value.
  ScalarField(GridPtr grid, std::vector<double> values, std::string name = {});

  const Grid& grid() const noexcept { return *grid_; }
  const GridPtr& grid_ptr() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const noexcept { return values_.size(); }
  const std::string& name() const noexcept { return name_; }

  double min() const;
  double max() const;

  /// phi - t
  ScalarField shifted(double t) const;
  /// lambda * phi
  ScalarField scaled(double lambda) const;

 private:
  GridPtr grid_;
  std::vector<double> values_;
  std::string name_;
};

ScalarField sample(const GridPtr& grid, const PointFunction& fn, std::string name = {});

/// N components per node, stored node-major.
class VectorField {
 public:
  VectorField(GridPtr grid, std::vector<double> components);

  const Grid& grid() const noexcept { return *grid_; }
  std::span<const double> at(std::size_t i) const {
    return {components_.data() + i * grid_->dim(), grid_->dim()};
  }
  std::span<const double> components() const noexcept { return components_; }

 private:
  GridPtr grid_;
  std::vector<double> components_;
};

/// sign(x) |x|^e, zero at zero for every e > 0.
double signed_pow(double x, double e);

/// Central differences at interior nodes, one-sided next to the boundary.
/// Cut-cell polygon grids use a least-squares fit over lattice neighbours,
/// which reduces to the same stencils on full cells and is exact for
/// affine functions.
VectorField gradient(const ScalarField& f);

/// Integral of |phi|^r by cell-centre quadrature (not the r-th root).
double lr_norm(const ScalarField& f, double r);

/// Integral of |grad phi|^p.
double dirichlet_energy(const ScalarField& f, double p);
double dirichlet_energy(const VectorField& grad, double p);

/// Integral of |phi|^{q-2} phi.
double signed_power_integral(const ScalarField& f, double q);

/// The constant t with integral |phi - t|^{q-2}(phi - t) = 0, i.e. the
/// minimizer of t -> integral |phi - t|^q.
double q_shift(const ScalarField& f, double q);

struct SplitParts {
  ScalarField pos;  ///< |phi|^{q-2} phi_+
  ScalarField neg;  ///< |phi|^{q-2} phi_-
};

SplitParts split_parts(const ScalarField& f, double q);

}  // namespace otpw
