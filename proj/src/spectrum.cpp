#include "otpw/spectrum.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <ostream>
#include <set>
#include <utility>

#include "otpw/error.hpp"
#include "otpw/format.hpp"
#include "otpw/rng.hpp"

namespace otpw {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

Vec cell_volumes(const Grid& g) {
  const auto v = g.volumes();
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Two-point flux Laplacian; faces toward missing cells carry no flux.
SpMat flux_laplacian(const Grid& g) {
  std::vector<Eigen::Triplet<double>> t;
  const std::size_t n = g.size();
  t.reserve(n * (2 * g.dim() + 1));
  std::vector<double> diag(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < g.dim(); ++k) {
      const auto nb = g.neighbor(i, k, +1);
      const double aperture = g.face_aperture(i, k);
      if (nb < 0 || aperture <= 0.0) continue;
      const auto j = static_cast<std::size_t>(nb);
      const double w = aperture / (g.node(j)[k] - g.node(i)[k]);
      diag[i] += w;
      diag[j] += w;
      t.emplace_back(i, j, -w);
      t.emplace_back(j, i, -w);
    }
  }
  for (std::size_t i = 0; i < n; ++i) t.emplace_back(i, i, diag[i]);
  SpMat k(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  k.setFromTriplets(t.begin(), t.end());
  return k;
}

// Piece of the piecewise linear interpolant with a constant gradient:
// an edge in 1D, a triangle in 2D.
struct Element {
  std::array<std::size_t, 3> nodes{};
  std::size_t count = 0;
  std::array<std::array<double, 3>, 2> grad{};  // grad u = sum_a grad[k][a] u[nodes[a]]
  double weight = 0.0;
};

std::vector<Element> lattice_elements(const Grid& g) {
  std::vector<Element> out;
  if (g.dim() == 1) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      const auto nb = g.neighbor(i, 0, +1);
      if (nb < 0) continue;
      const auto j = static_cast<std::size_t>(nb);
      const double len = g.node(j)[0] - g.node(i)[0];
      Element e;
      e.nodes = {i, j, 0};
      e.count = 2;
      e.grad[0] = {-1.0 / len, 1.0 / len, 0.0};
      e.weight = len;
      out.push_back(e);
    }
    return out;
  }
  if (g.dim() != 2) throw Error(ErrorCode::InvalidArgument, "p != 2 eigenproblems support 1D and 2D grids");

  // Every lattice square touching a node, keyed by its lower-left corner.
  std::set<std::pair<std::size_t, std::size_t>> seen;
  const auto& shape = g.shape();
  double area_sum = 0.0;
  for (std::size_t n = 0; n < g.size(); ++n) {
    const auto lc = g.lattice_coordinates(n);
    for (std::size_t ox = 0; ox < 2; ++ox) {
      for (std::size_t oy = 0; oy < 2; ++oy) {
        if (lc[0] < ox || lc[1] < oy) continue;
        const std::size_t a = lc[0] - ox, b = lc[1] - oy;
        if (a + 1 >= shape[0] || b + 1 >= shape[1]) continue;
        if (!seen.insert({a, b}).second) continue;
        std::array<std::int64_t, 4> c{};  // corners 00, 10, 01, 11
        for (int cx = 0; cx < 2; ++cx) {
          for (int cy = 0; cy < 2; ++cy) {
            const int off[2] = {cx - static_cast<int>(ox), cy - static_cast<int>(oy)};
            c[static_cast<std::size_t>(cx + 2 * cy)] = g.offset_neighbor(n, off);
          }
        }
        std::vector<std::array<std::int64_t, 3>> tris;
        const int present = static_cast<int>(std::count_if(c.begin(), c.end(), [](auto v) { return v >= 0; }));
        if (present == 4) {
          tris.push_back({c[0], c[1], c[3]});
          tris.push_back({c[0], c[3], c[2]});
        } else if (present == 3) {
          std::array<std::int64_t, 3> t{};
          std::size_t m = 0;
          for (std::size_t q : {0, 1, 3, 2}) {
            if (c[q] >= 0) t[m++] = c[q];
          }
          tris.push_back(t);
        }
        for (const auto& t : tris) {
          const auto p0 = g.node(static_cast<std::size_t>(t[0]));
          const auto p1 = g.node(static_cast<std::size_t>(t[1]));
          const auto p2 = g.node(static_cast<std::size_t>(t[2]));
          const double e1x = p1[0] - p0[0], e1y = p1[1] - p0[1];
          const double e2x = p2[0] - p0[0], e2y = p2[1] - p0[1];
          const double det = e1x * e2y - e1y * e2x;
          if (std::abs(det) < 1e-14 * g.h() * g.h()) continue;
          Element e;
          e.nodes = {static_cast<std::size_t>(t[0]), static_cast<std::size_t>(t[1]), static_cast<std::size_t>(t[2])};
          e.count = 3;
          const double gx1 = e2y / det, gx2 = -e1y / det;
          const double gy1 = -e2x / det, gy2 = e1x / det;
          e.grad[0] = {-(gx1 + gx2), gx1, gx2};
          e.grad[1] = {-(gy1 + gy2), gy1, gy2};
          e.weight = 0.5 * std::abs(det);
          area_sum += e.weight;
          out.push_back(e);
        }
      }
    }
  }
  // The triangles cover the hull of the nodes, which misses a boundary
  // strip of width h/2; stretch the weights to the full cell volume.
  const double scale = g.total_volume() / area_sum;
  for (auto& e : out) e.weight *= scale;
  return out;
}

std::array<double, 2> element_gradient(const Element& e, std::size_t dim, const Vec& u) {
  std::array<double, 2> gr{0.0, 0.0};
  for (std::size_t k = 0; k < dim; ++k) {
    for (std::size_t a = 0; a < e.count; ++a) gr[k] += e.grad[k][a] * u[static_cast<Eigen::Index>(e.nodes[a])];
  }
  return gr;
}

// sum_e coef_e * weight_e * G_e^T G_e
SpMat element_stiffness(const std::vector<Element>& elements, std::size_t n, std::size_t dim,
                        const std::vector<double>& coef) {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(elements.size() * 9);
  for (std::size_t idx = 0; idx < elements.size(); ++idx) {
    const auto& e = elements[idx];
    const double w = e.weight * (coef.empty() ? 1.0 : coef[idx]);
    for (std::size_t a = 0; a < e.count; ++a) {
      for (std::size_t b = 0; b < e.count; ++b) {
        double s = 0.0;
        for (std::size_t k = 0; k < dim; ++k) s += e.grad[k][a] * e.grad[k][b];
        t.emplace_back(e.nodes[a], e.nodes[b], w * s);
      }
    }
  }
  SpMat k(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  k.setFromTriplets(t.begin(), t.end());
  return k;
}

struct Mode {
  double eigenvalue = 0.0;
  Vec vector;
  double residual = 0.0;
  std::size_t iterations = 0;
};

void deflate_constants(Mat& x, const Vec& mass) {
  const double total = mass.sum();
  for (Eigen::Index c = 0; c < x.cols(); ++c) x.col(c).array() -= mass.dot(x.col(c)) / total;
}

// Second eigenpair of K x = lambda diag(mass) x, K singular on constants.
Mode lowest_nontrivial(const SpMat& k, const Vec& mass, double shift) {
  const auto n = k.rows();
  const Vec sqrt_m = mass.array().sqrt();
  const Vec inv_sqrt_m = sqrt_m.cwiseInverse();
  if (n <= 64) {
    const Mat kd = Mat(k);
    const Mat scaled = inv_sqrt_m.asDiagonal() * kd * inv_sqrt_m.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (scaled + scaled.transpose()));
    Mode m;
    m.eigenvalue = es.eigenvalues()[1];
    m.vector = inv_sqrt_m.asDiagonal() * es.eigenvectors().col(1);
    const Vec r = k * m.vector - m.eigenvalue * mass.cwiseProduct(m.vector);
    m.residual = std::sqrt(r.cwiseProduct(r).cwiseQuotient(mass).sum()) /
                 (std::max(m.eigenvalue, 1e-300) * std::sqrt(m.vector.dot(mass.cwiseProduct(m.vector))));
    return m;
  }

  SpMat a = k;
  for (Eigen::Index i = 0; i < n; ++i) a.coeffRef(i, i) += shift * mass[i];
  Eigen::SimplicialLDLT<SpMat> solver(a);
  if (solver.info() != Eigen::Success) throw Error(ErrorCode::NoConvergence, "shifted Laplacian factorization failed");

  const Eigen::Index block = std::min<Eigen::Index>(4, n - 1);
  Mat x(n, block);
  Rng rng(0x5eed);
  for (Eigen::Index c = 0; c < block; ++c) {
    for (Eigen::Index i = 0; i < n; ++i) x(i, c) = rng.uniform(-1.0, 1.0);
  }
  Mode mode;
  double previous = std::numeric_limits<double>::infinity();
  std::size_t flat = 0;
  for (std::size_t it = 1; it <= 5000; ++it) {
    deflate_constants(x, mass);
    Mat y = solver.solve(mass.asDiagonal() * x);
    deflate_constants(y, mass);
    // Orthonormalize in the mass inner product, then Rayleigh-Ritz.
    const Mat z = sqrt_m.asDiagonal() * y;
    Eigen::HouseholderQR<Mat> qr(z);
    const Mat q = qr.householderQ() * Mat::Identity(n, block);
    y = inv_sqrt_m.asDiagonal() * q;
    const Mat ky = k * y;
    Mat small = y.transpose() * ky;
    small = 0.5 * (small + small.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(small);
    x = y * es.eigenvectors();
    mode.eigenvalue = es.eigenvalues()[0];
    mode.vector = x.col(0);
    mode.iterations = it;
    const Vec r = k * mode.vector - mode.eigenvalue * mass.cwiseProduct(mode.vector);
    mode.residual = std::sqrt(r.cwiseProduct(r).cwiseQuotient(mass).sum()) / std::abs(mode.eigenvalue);
    if (mode.residual < 1e-10) break;
    flat = std::abs(previous - mode.eigenvalue) <= 1e-15 * std::abs(mode.eigenvalue) ? flat + 1 : 0;
    if (flat >= 5 && mode.residual < 1e-7) break;
    previous = mode.eigenvalue;
  }
  if (!(mode.residual < 1e-6)) {
    throw Error(ErrorCode::NoConvergence, "inverse iteration residual " + format_double(mode.residual));
  }
  return mode;
}

double domain_shift(const Grid& g) {
  const double d = g.domain().diameter();
  return 1.0 / (d * d);
}

EigenResult solve_linear(const GridPtr& grid) {
  const Grid& g = *grid;
  const Vec mass = cell_volumes(g);
  Mode mode = lowest_nontrivial(flux_laplacian(g), mass, domain_shift(g));
  Vec u = mode.vector;
  u.array() -= mass.dot(u) / mass.sum();
  u /= std::sqrt(u.dot(mass.cwiseProduct(u)));
  if (u[0] > 0.0) u = -u;
  std::vector<double> values(u.data(), u.data() + u.size());
  const double constraint = std::abs(mass.dot(u));
  EigenResult r{2.0, mode.eigenvalue, ScalarField(grid, std::move(values), "eigenfunction"), constraint,
                mode.residual, {mode.eigenvalue}, g.resolution(), mode.iterations};
  return r;
}

// Shift-invariant quotient E(u) / min_t sum V |u - t|^p.
class Quotient {
 public:
  Quotient(GridPtr grid, double p) : grid_(std::move(grid)), p_(p), elements_(lattice_elements(*grid_)) {
    mass_ = cell_volumes(*grid_);
  }

  const std::vector<Element>& elements() const { return elements_; }
  const Vec& mass() const { return mass_; }
  const GridPtr& grid() const { return grid_; }

  double shift(const Vec& u) const {
    return q_shift(ScalarField(grid_, std::vector<double>(u.data(), u.data() + u.size())), p_);
  }

  double energy(const Vec& u) const {
    double e = 0.0;
    for (const auto& el : elements_) {
      const auto gr = element_gradient(el, grid_->dim(), u);
      const double s = gr[0] * gr[0] + gr[1] * gr[1];
      if (s > 0.0) e += el.weight * std::pow(s, 0.5 * p_);
    }
    return e;
  }

  double deviation(const Vec& u, double t) const {
    double d = 0.0;
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      const double a = std::abs(u[i] - t);
      if (a > 0.0) d += mass_[i] * std::pow(a, p_);
    }
    return d;
  }

  double value(const Vec& u) const { return energy(u) / deviation(u, shift(u)); }

  Vec energy_gradient(const Vec& u, std::vector<double>& grad_norms) const {
    Vec out = Vec::Zero(u.size());
    grad_norms.resize(elements_.size());
    for (std::size_t idx = 0; idx < elements_.size(); ++idx) {
      const auto& el = elements_[idx];
      const auto gr = element_gradient(el, grid_->dim(), u);
      const double s = gr[0] * gr[0] + gr[1] * gr[1];
      grad_norms[idx] = std::sqrt(s);
      if (s == 0.0) continue;
      const double factor = el.weight * p_ * std::pow(s, 0.5 * p_ - 1.0);
      for (std::size_t a = 0; a < el.count; ++a) {
        double dot = 0.0;
        for (std::size_t k = 0; k < grid_->dim(); ++k) dot += gr[k] * el.grad[k][a];
        out[static_cast<Eigen::Index>(el.nodes[a])] += factor * dot;
      }
    }
    return out;
  }

 private:
  GridPtr grid_;
  double p_;
  std::vector<Element> elements_;
  Vec mass_;
};

EigenResult solve_nonlinear(const GridPtr& grid, double p, const EigenOptions& options) {
  const Grid& g = *grid;
  Quotient quotient(grid, p);
  const Vec& mass = quotient.mass();
  const std::size_t n = g.size();

  // Start from the linear eigenvector of the same discretization.
  const SpMat k2 = element_stiffness(quotient.elements(), n, g.dim(), {});
  Vec u = lowest_nontrivial(k2, mass, domain_shift(g)).vector;

  auto normalize = [&](Vec& v) {
    v.array() -= quotient.shift(v);
    v /= std::pow(quotient.deviation(v, 0.0), 1.0 / p);
  };
  normalize(u);

  std::vector<double> history;
  std::vector<double> grad_norms;
  std::vector<double> coef;
  double relative_decrease = 0.0;
  std::size_t it = 0;
  bool converged = false;
  for (; it < options.max_iterations; ++it) {
    const double value = quotient.energy(u);  // deviation is 1 after normalize
    history.push_back(value);
    if (history.size() > options.stall_window) {
      const double old = history[history.size() - 1 - options.stall_window];
      relative_decrease = (old - value) / value;
      if (relative_decrease < options.stall_tolerance) {
        converged = true;
        break;
      }
    }

    // Gradient of the quotient at a normalized, constraint-satisfying u.
    Vec grad = quotient.energy_gradient(u, grad_norms);
    double umax = u.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      const double a = std::abs(u[i]);
      if (a > 0.0) grad[i] -= value * p * mass[i] * std::pow(a, p - 2.0) * u[i];
    }

    // Linearized p-Laplacian, regularized where the gradient or u vanish.
    double gmax = 0.0;
    for (double s : grad_norms) gmax = std::max(gmax, s);
    const double dg = 1e-4 * gmax, du = 1e-4 * umax;
    coef.resize(grad_norms.size());
    for (std::size_t e = 0; e < coef.size(); ++e) {
      coef[e] = p * (p - 1.0) * std::pow(grad_norms[e] * grad_norms[e] + dg * dg, 0.5 * (p - 2.0));
    }
    SpMat a = element_stiffness(quotient.elements(), n, g.dim(), coef);
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      a.coeffRef(i, i) += 0.1 * value * p * (p - 1.0) * mass[i] * std::pow(u[i] * u[i] + du * du, 0.5 * (p - 2.0));
    }
    Eigen::SimplicialLDLT<SpMat> solver(a);
    if (solver.info() != Eigen::Success) throw Error(ErrorCode::NoConvergence, "preconditioner factorization failed");
    const Vec dir = -solver.solve(grad);
    const double slope = grad.dot(dir);
    if (!(slope < 0.0)) {
      converged = true;
      break;
    }

    // Armijo backtracking from the full inverse-iteration-like step.
    double alpha = 1.0;
    bool accepted = false;
    Vec trial;
    for (int ls = 0; ls < 50; ++ls, alpha *= 0.5) {
      trial = u + alpha * dir;
      if (quotient.value(trial) <= value + 1e-4 * alpha * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // No representable decrease left along a descent direction.
      converged = true;
      break;
    }
    normalize(trial);
    u = std::move(trial);
  }
  if (!converged) {
    throw Error(ErrorCode::NoConvergence, "quotient descent hit the iteration cap of " +
                                              std::to_string(options.max_iterations));
  }

  normalize(u);
  if (u[0] > 0.0) u = -u;
  const double eigenvalue = quotient.energy(u) / quotient.deviation(u, 0.0);
  std::vector<double> values(u.data(), u.data() + u.size());
  ScalarField f(grid, std::move(values), "eigenfunction");
  const double constraint = std::abs(signed_power_integral(f, p));
  history.push_back(eigenvalue);
  EigenResult r{p, eigenvalue, std::move(f), constraint, std::max(relative_decrease, 0.0), std::move(history),
                g.resolution(), it};
  return r;
}

}  // namespace

EigenResult neumann_eigenvalue(const GridPtr& grid, double p, const EigenOptions& options) {
  if (!(p > 1.0) || !std::isfinite(p)) throw Error(ErrorCode::InvalidArgument, "eigenproblem needs p > 1");
  if (grid->size() < 3) throw Error(ErrorCode::ResolutionTooLow, "eigenproblem needs at least 3 cells");
  if (p == 2.0) return solve_linear(grid);
  return solve_nonlinear(grid, p, options);
}

EigenEstimate estimate_eigenvalue(const ConvexDomain& domain, double p, std::size_t resolution,
                                  const EigenOptions& options) {
  if (resolution < 8) throw Error(ErrorCode::ResolutionTooLow, "extrapolation needs resolution >= 8");
  EigenEstimate est;
  for (std::size_t r : {resolution / 4, resolution / 2, resolution}) {
    est.levels.push_back(neumann_eigenvalue(discretize(domain, r), p, options));
  }
  const double l1 = est.levels[0].eigenvalue, l2 = est.levels[1].eigenvalue, l3 = est.levels[2].eigenvalue;
  const double d1 = l2 - l1, d2 = l3 - l2;
  est.eigenvalue = l3;
  if (d1 != 0.0 && d2 != 0.0 && (d1 > 0) == (d2 > 0) && std::abs(d2) < std::abs(d1)) {
    const double ratio = d1 / d2;
    est.order = std::log2(ratio);
    est.eigenvalue = l3 + d2 / (ratio - 1.0);
  }
  est.error_bar = std::max(std::abs(d2), std::abs(est.eigenvalue - l3));
  return est;
}

double pi_p(double p) {
  if (!(p > 1.0)) throw Error(ErrorCode::InvalidArgument, "pi_p needs p > 1");
  const double pi = std::numbers::pi;
  return 2.0 * pi * std::pow(p - 1.0, 1.0 / p) / (p * std::sin(pi / p));
}

void write_eigen_csv(std::ostream& out, std::span<const EigenResult> results) {
  out << "resolution,p,eigenvalue,residual,iterations\n";
  for (const auto& r : results) {
    out << r.resolution << ',' << format_double(r.p) << ',' << format_double(r.eigenvalue) << ','
        << format_double(r.residual) << ',' << r.iterations << '\n';
  }
}

}  // namespace otpw
