#include "otpw/geodesic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "otpw/error.hpp"
#include "otpw/format.hpp"

namespace otpw {

namespace {

void check_time(double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw Error(ErrorCode::BadTime, "interpolation time must lie in [0, 1]");
}

// Sorts atoms lexicographically and merges exact duplicates.
DiscreteMeasure merged(std::size_t dim, const std::vector<double>& pos, const std::vector<double>& w) {
  const std::size_t n = w.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  auto less = [&](std::size_t a, std::size_t b) {
    return std::lexicographical_compare(pos.begin() + static_cast<std::ptrdiff_t>(a * dim),
                                        pos.begin() + static_cast<std::ptrdiff_t>(a * dim + dim),
                                        pos.begin() + static_cast<std::ptrdiff_t>(b * dim),
                                        pos.begin() + static_cast<std::ptrdiff_t>(b * dim + dim));
  };
  std::stable_sort(idx.begin(), idx.end(), less);
  std::vector<double> out_pos, out_w;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = idx[k];
    const bool same = !out_w.empty() &&
                      std::equal(pos.begin() + static_cast<std::ptrdiff_t>(i * dim),
                                 pos.begin() + static_cast<std::ptrdiff_t>(i * dim + dim),
                                 out_pos.end() - static_cast<std::ptrdiff_t>(dim));
    if (same) {
      out_w.back() += w[i];
    } else {
      out_pos.insert(out_pos.end(), pos.begin() + static_cast<std::ptrdiff_t>(i * dim),
                     pos.begin() + static_cast<std::ptrdiff_t>(i * dim + dim));
      out_w.push_back(w[i]);
    }
  }
  return DiscreteMeasure::normalized(dim, std::move(out_pos), std::move(out_w));
}

struct Cell {
  double left;
  double width;
  double mass;
};

std::vector<Cell> mass_cells(const ScalarField& f) {
  const Grid& g = f.grid();
  if (g.dim() != 1) throw Error(ErrorCode::DimensionMismatch, "density interpolation needs 1D fields");
  const auto vol = g.volumes();
  const double lo = g.domain().lower()[0];
  const double h = g.spacing()[0];
  std::vector<Cell> cells;
  double total = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i] < 0.0) throw Error(ErrorCode::DegenerateCDF, "density has negative samples");
    const double mass = f[i] * vol[i];
    total += mass;
    if (mass > 0.0) cells.push_back({lo + static_cast<double>(i) * h, vol[i], mass});
  }
  if (!(total > 0.0)) throw Error(ErrorCode::ZeroMass, "density integrates to zero");
  for (auto& c : cells) c.mass /= total;
  return cells;
}

GridPtr hull_grid(const ScalarField& f0, const ScalarField& f1) {
  const Grid& g0 = f0.grid();
  const Grid& g1 = f1.grid();
  const double lo0 = g0.domain().lower()[0], hi0 = g0.domain().upper()[0];
  const double lo1 = g1.domain().lower()[0], hi1 = g1.domain().upper()[0];
  if (lo0 == lo1 && hi0 == hi1 && g0.size() == g1.size()) return f0.grid_ptr();
  const double lo = std::min(lo0, lo1), hi = std::max(hi0, hi1);
  const double h = std::min(g0.spacing()[0], g1.spacing()[0]);
  const auto res = static_cast<std::size_t>(std::ceil((hi - lo) / h - 1e-9));
  return discretize(ConvexDomain::interval(lo, hi), std::max<std::size_t>(res, 2));
}

}  // namespace

GeodesicSample displacement_interpolate(const TransportPlan& plan, double t) {
  check_time(t);
  const std::size_t dim = plan.source().dim();
  std::vector<double> pos, w;
  pos.reserve(plan.entries().size() * dim);
  for (const auto& e : plan.entries()) {
    if (!(e.weight > 0.0)) continue;
    const auto x = plan.source().position(e.source);
    const auto y = plan.target().position(e.target);
    for (std::size_t k = 0; k < dim; ++k) pos.push_back((1.0 - t) * x[k] + t * y[k]);
    w.push_back(e.weight);
  }
  return {t, merged(dim, pos, w), std::nullopt};
}

DensityInterpolant interpolant_density_1d(const ScalarField& f0, const ScalarField& f1, double t, GridPtr out) {
  check_time(t);
  const auto a = mass_cells(f0);
  const auto b = mass_cells(f1);
  if (!out) out = hull_grid(f0, f1);
  if (out->dim() != 1) throw Error(ErrorCode::DimensionMismatch, "output grid must be 1D");

  const std::size_t cells = out->size();
  const double lo = out->domain().lower()[0];
  const double h = out->spacing()[0];
  std::vector<double> mass(cells, 0.0);

  auto deposit = [&](double start, double width, double m) {
    const double end = start + width;
    auto first = static_cast<std::int64_t>(std::floor((start - lo) / h));
    auto last = static_cast<std::int64_t>(std::floor((end - lo) / h));
    first = std::max<std::int64_t>(first, 0);
    last = std::min<std::int64_t>(last, static_cast<std::int64_t>(cells) - 1);
    for (std::int64_t k = first; k <= last; ++k) {
      const double left = lo + static_cast<double>(k) * h;
      const double right = k + 1 == static_cast<std::int64_t>(cells) ? out->domain().upper()[0] : left + h;
      const double overlap = std::min(end, right) - std::max(start, left);
      if (overlap <= 0.0) continue;
      mass[static_cast<std::size_t>(k)] += m * overlap / width;
    }
  };

  // Sweep the merged mass breakpoints of both CDFs. On each piece the
  // source and target densities are constant, so the map is affine.
  std::size_t i = 0, j = 0;
  double used_a = 0.0, used_b = 0.0;
  while (i < a.size() && j < b.size()) {
    const double ra = a[i].mass - used_a;
    const double rb = b[j].mass - used_b;
    const double ds = std::min(ra, rb);
    if (ds > 0.0) {
      const double da = a[i].mass / a[i].width;
      const double db = b[j].mass / b[j].width;
      const double xs = a[i].left + used_a / da;
      const double ys = b[j].left + used_b / db;
      const double width = (1.0 - t) * ds / da + t * ds / db;
      deposit((1.0 - t) * xs + t * ys, width, ds);
    }
    used_a += ds;
    used_b += ds;
    if (ra <= rb) {
      ++i;
      used_a = 0.0;
    }
    if (rb <= ra) {
      ++j;
      used_b = 0.0;
    }
  }

  const auto vol = out->volumes();
  double total = 0.0;
  for (double m : mass) total += m;
  const double drift = std::abs(total - 1.0);
  // Renormalize only when mass genuinely leaked past the output grid.
  const double scale = drift > 1e-6 && total > 0.0 ? 1.0 / total : 1.0;
  std::vector<double> dens(cells);
  for (std::size_t k = 0; k < cells; ++k) dens[k] = mass[k] * scale / vol[k];
  DensityInterpolant result{ScalarField(out, std::move(dens), "f_t"), drift, scale != 1.0};
  return result;
}

double lq_norm(const ScalarField& f, double q) {
  if (!(q >= 1.0)) throw Error(ErrorCode::InvalidArgument, "lq_norm needs q >= 1");
  return std::pow(lr_norm(f, q), 1.0 / q);
}

ConvexityReport lq_convexity_check(const ScalarField& f0, const ScalarField& f1, double q,
                                   std::span<const double> times, GridPtr out) {
  if (!(q >= 1.0)) throw Error(ErrorCode::InvalidArgument, "convexity check needs q >= 1");
  auto unit = [](const ScalarField& f) {
    const double mass = lr_norm(f, 1.0);
    if (!(mass > 0.0)) throw Error(ErrorCode::ZeroMass, "density integrates to zero");
    return f.scaled(1.0 / mass);
  };
  const double n0 = lr_norm(unit(f0), q);
  const double n1 = lr_norm(unit(f1), q);
  if (!out) out = hull_grid(f0, f1);

  ConvexityReport report;
  report.max_violation = -std::numeric_limits<double>::infinity();
  for (double t : times) {
    const auto ft = interpolant_density_1d(f0, f1, t, out);
    const double lhs = lq_norm(ft.density, q);
    const double rhs = std::pow((1.0 - t) * n0 + t * n1, 1.0 / q);
    report.times.push_back(t);
    report.violations.push_back(lhs - rhs);
    report.max_violation = std::max(report.max_violation, lhs - rhs);
    report.max_mass_drift = std::max(report.max_mass_drift, ft.mass_drift);
  }
  if (times.empty()) report.max_violation = 0.0;
  return report;
}

void write_geodesic_csv(std::ostream& out, std::span<const GeodesicSample> samples) {
  const std::size_t dim = samples.empty() ? 1 : samples.front().measure.dim();
  out << 't';
  for (std::size_t k = 0; k < dim; ++k) out << ",x" << k + 1;
  out << ",weight\n";
  for (const auto& s : samples) {
    for (std::size_t i = 0; i < s.measure.size(); ++i) {
      out << format_double(s.t);
      for (double x : s.measure.position(i)) out << ',' << format_double(x);
      out << ',' << format_double(s.measure.weight(i)) << '\n';
    }
  }
}

}  // namespace otpw
