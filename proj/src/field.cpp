#include "otpw/field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "otpw/error.hpp"

namespace otpw {

ScalarField::ScalarField(GridPtr grid, std::vector<double> values, std::string name)
    : grid_(std::move(grid)), values_(std::move(values)), name_(std::move(name)) {
  if (!grid_) throw Error(ErrorCode::InvalidArgument, "field needs a grid");
  if (values_.size() != grid_->size()) {
    throw Error(ErrorCode::InvalidArgument, "field value count does not match grid node count");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "field values must be finite");
  }
}

double ScalarField::min() const { return *std::min_element(values_.begin(), values_.end()); }
double ScalarField::max() const { return *std::max_element(values_.begin(), values_.end()); }

ScalarField ScalarField::shifted(double t) const {
  std::vector<double> v(values_);
  for (double& x : v) x -= t;
  return ScalarField(grid_, std::move(v), name_);
}

ScalarField ScalarField::scaled(double lambda) const {
  std::vector<double> v(values_);
  for (double& x : v) x *= lambda;
  return ScalarField(grid_, std::move(v), name_);
}

ScalarField sample(const GridPtr& grid, const PointFunction& fn, std::string name) {
  std::vector<double> v(grid->size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = fn(grid->node(i));
  return ScalarField(grid, std::move(v), std::move(name));
}

VectorField::VectorField(GridPtr grid, std::vector<double> components)
    : grid_(std::move(grid)), components_(std::move(components)) {
  if (components_.size() != grid_->size() * grid_->dim()) {
    throw Error(ErrorCode::InvalidArgument, "vector field size does not match grid");
  }
  for (double v : components_) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "vector field entries must be finite");
  }
}

double signed_pow(double x, double e) {
  if (x > 0.0) return std::pow(x, e);
  if (x < 0.0) return -std::pow(-x, e);
  return 0.0;
}

namespace {

void axis_differences(const ScalarField& f, std::size_t i, std::span<double> out) {
  const Grid& g = f.grid();
  const auto xi = g.node(i);
  for (std::size_t k = 0; k < g.dim(); ++k) {
    const auto lo = g.neighbor(i, k, -1);
    const auto hi = g.neighbor(i, k, +1);
    if (lo >= 0 && hi >= 0) {
      const auto l = static_cast<std::size_t>(lo), h = static_cast<std::size_t>(hi);
      out[k] = (f[h] - f[l]) / (g.node(h)[k] - g.node(l)[k]);
    } else if (hi >= 0) {
      const auto h = static_cast<std::size_t>(hi);
      out[k] = (f[h] - f[i]) / (g.node(h)[k] - xi[k]);
    } else if (lo >= 0) {
      const auto l = static_cast<std::size_t>(lo);
      out[k] = (f[i] - f[l]) / (xi[k] - g.node(l)[k]);
    } else {
      out[k] = 0.0;
    }
  }
}

// Least-squares affine fit around node i in the plane.
bool least_squares_2d(const ScalarField& f, std::size_t i, bool with_diagonals, std::span<double> out) {
  const Grid& g = f.grid();
  const auto xi = g.node(i);
  double a11 = 0, a12 = 0, a22 = 0, b1 = 0, b2 = 0;
  std::size_t count = 0;
  auto accumulate = [&](std::int64_t nb) {
    if (nb < 0) return;
    const auto j = static_cast<std::size_t>(nb);
    const double dx = g.node(j)[0] - xi[0];
    const double dy = g.node(j)[1] - xi[1];
    const double du = f[j] - f[i];
    a11 += dx * dx;
    a12 += dx * dy;
    a22 += dy * dy;
    b1 += dx * du;
    b2 += dy * du;
    ++count;
  };
  for (std::size_t k = 0; k < 2; ++k) {
    accumulate(g.neighbor(i, k, -1));
    accumulate(g.neighbor(i, k, +1));
  }
  if (with_diagonals) {
    for (int sx : {-1, 1}) {
      for (int sy : {-1, 1}) {
        const int off[2] = {sx, sy};
        accumulate(g.offset_neighbor(i, off));
      }
    }
  }
  const double det = a11 * a22 - a12 * a12;
  const double scale = (a11 + a22) * (a11 + a22);
  if (count < 2 || !(det > 1e-10 * scale)) return false;
  out[0] = (a22 * b1 - a12 * b2) / det;
  out[1] = (a11 * b2 - a12 * b1) / det;
  return true;
}

}  // namespace

VectorField gradient(const ScalarField& f) {
  const Grid& g = f.grid();
  const std::size_t n = g.size(), dim = g.dim();
  std::vector<double> comp(n * dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::span<double> out(comp.data() + i * dim, dim);
    if (g.regular() || dim != 2) {
      axis_differences(f, i, out);
    } else if (!least_squares_2d(f, i, false, out) && !least_squares_2d(f, i, true, out)) {
      axis_differences(f, i, out);
    }
  }
  return VectorField(f.grid_ptr(), std::move(comp));
}

double lr_norm(const ScalarField& f, double r) {
  if (!(r > 0.0)) throw Error(ErrorCode::InvalidArgument, "lr_norm needs r > 0");
  const auto vol = f.grid().volumes();
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double a = std::abs(f[i]);
    if (a > 0.0) s += std::pow(a, r) * vol[i];
  }
  return s;
}

double dirichlet_energy(const VectorField& grad, double p) {
  if (!(p > 1.0)) throw Error(ErrorCode::InvalidArgument, "dirichlet_energy needs p > 1");
  const Grid& g = grad.grid();
  const auto vol = g.volumes();
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    double sq = 0.0;
    for (double c : grad.at(i)) sq += c * c;
    if (sq > 0.0) s += std::pow(sq, 0.5 * p) * vol[i];
  }
  return s;
}

double dirichlet_energy(const ScalarField& f, double p) {
  return dirichlet_energy(gradient(f), p);
}

double signed_power_integral(const ScalarField& f, double q) {
  if (!(q > 1.0)) throw Error(ErrorCode::InvalidArgument, "signed_power_integral needs q > 1");
  const auto vol = f.grid().volumes();
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += signed_pow(f[i], q - 1.0) * vol[i];
  return s;
}

double q_shift(const ScalarField& f, double q) {
  if (!(q > 1.0)) throw Error(ErrorCode::InvalidArgument, "q_shift needs q > 1");
  const auto vals = f.values();
  const auto vol = f.grid().volumes();
  double lo = f.min(), hi = f.max();
  if (lo == hi) return lo;

  // residual(t) = sum V |phi - t|^{q-2}(phi - t), strictly decreasing in t.
  struct Eval {
    double residual, slope, scale;
  };
  auto eval = [&](double t) {
    Eval e{0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const double d = vals[i] - t;
      const double a = std::abs(d);
      if (a == 0.0) {
        if (q < 2.0) e.slope = std::numeric_limits<double>::infinity();
        continue;
      }
      const double pw = std::pow(a, q - 2.0);
      e.residual += (d > 0 ? pw * a : -pw * a) * vol[i];
      e.scale += pw * a * vol[i];
      e.slope += (q - 1.0) * pw * vol[i];
    }
    return e;
  };

  double t = 0.5 * (lo + hi);
  double best_t = t, best_res = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < 300; ++iter) {
    const Eval e = eval(t);
    if (std::abs(e.residual) < best_res) {
      best_res = std::abs(e.residual);
      best_t = t;
    }
    if (std::abs(e.residual) <= 1e-15 * e.scale) break;
    if (e.residual > 0.0) {
      lo = t;
    } else {
      hi = t;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(lo), std::abs(hi))) break;
    double next = 0.5 * (lo + hi);
    if (std::isfinite(e.slope) && e.slope > 0.0) {
      const double newton = t + e.residual / e.slope;
      if (newton > lo && newton < hi) next = newton;
    }
    // Newton steps that barely move stall near kinks; fall back to bisection.
    if (next == t) next = 0.5 * (lo + hi);
    t = next;
  }
  return best_t;
}

SplitParts split_parts(const ScalarField& f, double q) {
  if (!(q > 1.0)) throw Error(ErrorCode::InvalidArgument, "split_parts needs q > 1");
  std::vector<double> pos(f.size(), 0.0), neg(f.size(), 0.0);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double v = f[i];
    if (v > 0.0) pos[i] = std::pow(v, q - 1.0);
    if (v < 0.0) neg[i] = std::pow(-v, q - 1.0);
  }
  return {ScalarField(f.grid_ptr(), std::move(pos), f.name() + "+"),
          ScalarField(f.grid_ptr(), std::move(neg), f.name() + "-")};
}

}  // namespace otpw
