#include "otpw/certify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>

#include "otpw/error.hpp"
#include "otpw/format.hpp"

namespace otpw {

std::string_view to_string(InequalityId id) {
  switch (id) {
    case InequalityId::Main: return "main";
    case InequalityId::Moment: return "moment";
    case InequalityId::Triangle: return "triangle";
    case InequalityId::Expedient: return "expedient";
    case InequalityId::Nash: return "nash";
    case InequalityId::Pw: return "pw";
    case InequalityId::EigenPw: return "eigen_pw";
    case InequalityId::EigenSharp: return "eigen_sharp";
    case InequalityId::Convexity: return "convexity";
    case InequalityId::GeodesicSpeed: return "geodesic_speed";
    case InequalityId::Scaling: return "scaling";
  }
  return "main";
}

InequalityId parse_inequality(std::string_view name) {
  for (auto id : {InequalityId::Main, InequalityId::Moment, InequalityId::Triangle, InequalityId::Expedient,
                  InequalityId::Nash, InequalityId::Pw, InequalityId::EigenPw, InequalityId::EigenSharp,
                  InequalityId::Convexity, InequalityId::GeodesicSpeed, InequalityId::Scaling}) {
    if (to_string(id) == name) return id;
  }
  throw Error(ErrorCode::ConfigInvalid, "unknown inequality '" + std::string(name) + "'");
}

double InequalityReport::detail(std::string_view key) const {
  for (const auto& [k, v] : details) {
    if (k == key) return v;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double transport_exponent(double p, double q) { return p / (p - q); }

void require_exponents(double p, double q) {
  if (!(q > 1.0 && q < p && std::isfinite(p))) {
    throw Error(ErrorCode::InvalidArgument, "exponents must satisfy 1 < q < p (got p=" + format_double(p) +
                                                ", q=" + format_double(q) + ")");
  }
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

double roundoff(double lhs, double rhs) { return 1e-12 * (std::abs(lhs) + std::abs(rhs)); }

InequalityReport base_report(InequalityId id, const Grid& g, double p, double q) {
  InequalityReport r;
  r.id = id;
  r.p = p;
  r.q = q;
  r.r = transport_exponent(p, q);
  r.domain = g.domain().label();
  r.resolution = g.resolution();
  r.solver = "none";
  return r;
}

void finish(InequalityReport& r, double lhs, double rhs, double solver_error) {
  r.lhs = lhs;
  r.rhs = rhs;
  r.slack = rhs - lhs;
  r.error_bar = solver_error + roundoff(lhs, rhs);
}

double golden_section(const std::function<double(double)>& f, double lo, double hi, std::size_t steps,
                      double& argmin) {
  constexpr double inv_phi = 0.6180339887498949;
  if (!(hi > lo)) {
    argmin = lo;
    return f(lo);
  }
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  for (std::size_t i = 0; i < steps; ++i) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  // The bracket endpoints matter when the minimum sits on the boundary.
  double best = fc <= fd ? c : d;
  double fbest = std::min(fc, fd);
  for (double x : {lo, hi}) {
    const double fx = f(x);
    if (fx < fbest) {
      fbest = fx;
      best = x;
    }
  }
  argmin = best;
  return fbest;
}

// Vertical chord of a convex polygon at abscissa x.
std::pair<double, double> polygon_chord(const std::vector<Vec2>& poly, double x) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % n];
    const double xmin = std::min(a[0], b[0]), xmax = std::max(a[0], b[0]);
    if (x < xmin || x > xmax) continue;
    if (a[0] == b[0]) {
      lo = std::min({lo, a[1], b[1]});
      hi = std::max({hi, a[1], b[1]});
    } else {
      const double s = (x - a[0]) / (b[0] - a[0]);
      const double y = a[1] + s * (b[1] - a[1]);
      lo = std::min(lo, y);
      hi = std::max(hi, y);
    }
  }
  if (lo > hi) lo = hi = 0.5 * (lo + hi);
  return {lo, hi};
}

// Shared quantities of one field at one resolution.
class FieldAnalysis {
 public:
  FieldAnalysis(const ScalarField& f, double p, double q, bool constrained) : f_(f), p_(p), q_(q) {
    require_exponents(p, q);
    r_ = transport_exponent(p, q);
    iq_ = lr_norm(f, q);
    iq1_ = lr_norm(f, q - 1.0);
    energy_ = dirichlet_energy(f, p);
    if (constrained) {
      const double residual = signed_power_integral(f, q);
      if (!(std::abs(residual) <= kConstraintTolerance * iq1_)) {
        throw Error(ErrorCode::ConstraintViolated,
                    "integral |phi|^{q-2} phi = " + format_double(residual) + " exceeds tolerance relative to " +
                        format_double(iq1_) + "; shift the field by its q-mean first");
      }
    }
  }

  const ScalarField& field() const { return f_; }
  const Grid& grid() const { return f_.grid(); }
  double lhs_main() const { return std::pow(iq_, p_ - q_ + 1.0); }

  const TransportResult& transport(const TransportOptions& options) {
    if (!transport_) {
      const MeasurePair pair = rho_pair(f_, q_);
      transport_ = wasserstein(pair.rho0, pair.rho1, r_, options);
    }
    return *transport_;
  }

  InequalityReport main(const TransportOptions& options) {
    const auto& tr = transport(options);
    auto rep = base_report(InequalityId::Main, grid(), p_, q_);
    rep.solver = std::string(to_string(tr.solver));
    const double scale = energy_ * std::pow(iq1_, p_ - q_) / std::pow(2.0, p_ - 1.0);
    const double rhs = std::pow(tr.distance, p_) * scale;
    const double w_low = std::max(0.0, tr.distance - tr.distance_error());
    finish(rep, lhs_main(), rhs, rhs - std::pow(w_low, p_) * scale);
    rep.details.emplace_back("wasserstein", tr.distance);
    rep.details.emplace_back("half_mass_residual", half_mass_check(f_, q_));
    return rep;
  }

  InequalityReport moment(std::size_t steps) {
    auto rep = base_report(InequalityId::Moment, grid(), p_, q_);
    const auto [points, weights] = moment_weights();
    const auto best = minimize_moment(grid().domain(), points, weights, r_, steps);
    const double rhs = 2.0 * std::pow(best.value, p_ - q_) * energy_;
    finish(rep, lhs_main(), rhs, 0.0);
    for (std::size_t k = 0; k < best.x0.size(); ++k) rep.details.emplace_back("x0_" + std::to_string(k + 1), best.x0[k]);
    rep.details.emplace_back("moment", best.value);
    return rep;
  }

  InequalityReport triangle(std::span<const double> candidates, const TransportOptions& options) {
    const auto& tr = transport(options);
    auto rep = base_report(InequalityId::Triangle, grid(), p_, q_);
    rep.solver = std::string(to_string(tr.solver));
    const std::size_t dim = grid().dim();
    std::vector<double> pts(candidates.begin(), candidates.end());
    if (pts.empty()) pts = diameter_candidates(grid().domain(), 11);
    if (pts.size() % dim != 0) throw Error(ErrorCode::DimensionMismatch, "x0 candidates do not match the dimension");
    const auto [points, weights] = moment_weights();
    const DiscreteMeasure density(dim, points, normalized(weights));
    const double total = sum(weights);
    double worst_rhs = std::numeric_limits<double>::infinity();
    std::size_t worst = 0;
    for (std::size_t c = 0; c < pts.size() / dim; ++c) {
      const std::span<const double> x0(pts.data() + c * dim, dim);
      const double m = otpw::moment(density, r_, x0) * total;
      const double rhs = 2.0 * std::pow(m, 1.0 / r_) * std::pow(iq1_, (q_ - p_) / p_);
      if (rhs < worst_rhs) {
        worst_rhs = rhs;
        worst = c;
      }
    }
    finish(rep, tr.distance, worst_rhs, tr.distance_error());
    rep.details.emplace_back("candidates", static_cast<double>(pts.size() / dim));
    for (std::size_t k = 0; k < dim; ++k) rep.details.emplace_back("worst_x0_" + std::to_string(k + 1), pts[worst * dim + k]);
    return rep;
  }

  InequalityReport nash(const TransportOptions& options) {
    const auto& tr = transport(options);
    auto rep = base_report(InequalityId::Nash, grid(), p_, q_);
    rep.solver = std::string(to_string(tr.solver));
    const double diam = grid().domain().diameter();
    const double rhs = std::pow(diam, p_) / std::pow(2.0, p_ - 1.0) * energy_ * std::pow(iq1_, p_ - q_);
    finish(rep, lhs_main(), rhs, 0.0);
    rep.details.emplace_back("wasserstein", tr.distance);
    rep.details.emplace_back("diameter", diam);
    rep.details.emplace_back("wasserstein_over_diameter", tr.distance / diam);
    return rep;
  }

 private:
  static double sum(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }

  static std::vector<double> normalized(std::vector<double> v) {
    const double s = sum(v);
    for (double& x : v) x /= s;
    return v;
  }

  // Atoms x_i with weights V_i |phi_i|^{q-1}.
  std::pair<std::vector<double>, std::vector<double>> moment_weights() const {
    const Grid& g = grid();
    const auto vol = g.volumes();
    std::vector<double> pts, w;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double a = std::abs(f_[i]);
      if (a == 0.0) continue;
      const auto x = g.node(i);
      pts.insert(pts.end(), x.begin(), x.end());
      w.push_back(vol[i] * std::pow(a, q_ - 1.0));
    }
    if (w.empty()) throw Error(ErrorCode::ZeroMass, "field vanishes identically");
    return {pts, w};
  }

  const ScalarField& f_;
  double p_, q_, r_;
  double iq_ = 0.0, iq1_ = 0.0, energy_ = 0.0;
  std::optional<TransportResult> transport_;
};

InequalityReport pw_report(const ScalarField& f, double p, double q) {
  require_exponents(p, q);
  auto rep = base_report(InequalityId::Pw, f.grid(), p, q);
  const double t = q_shift(f, q);
  const double lhs = std::pow(lr_norm(f.shifted(t), q), p / q);
  const double diam = f.grid().domain().diameter();
  const double vol = f.grid().total_volume();
  const double rhs = std::pow(diam, p) / std::pow(2.0, p - 1.0) * std::pow(vol, p / q - 1.0) * dirichlet_energy(f, p);
  finish(rep, lhs, rhs, 0.0);
  rep.details.emplace_back("q_shift", t);
  return rep;
}

InequalityReport expedient_report(const ScalarField& phi, const ScalarField& f0, const ScalarField& f1, double p,
                                  double q, const TransportOptions& options) {
  require_exponents(p, q);
  if (f0.grid_ptr() != phi.grid_ptr() || f1.grid_ptr() != phi.grid_ptr()) {
    throw Error(ErrorCode::DimensionMismatch, "phi, f0 and f1 must share one grid");
  }
  const double r = transport_exponent(p, q);
  const double qd = q / (q - 1.0);
  const double m0 = lr_norm(f0, 1.0), m1 = lr_norm(f1, 1.0);
  if (!(m0 > 0.0) || !(m1 > 0.0)) throw Error(ErrorCode::ZeroMass, "densities must have positive mass");
  const ScalarField g0 = f0.scaled(1.0 / m0), g1 = f1.scaled(1.0 / m1);

  const auto vol = phi.grid().volumes();
  double lhs = 0.0;
  for (std::size_t i = 0; i < phi.size(); ++i) lhs += vol[i] * phi[i] * (g1[i] - g0[i]);

  const auto tr = wasserstein(from_density(g0), from_density(g1), r, options);
  const double grad = std::pow(dirichlet_energy(phi, p), 1.0 / p);
  const double norms = std::pow(0.5 * (lr_norm(g0, qd) + lr_norm(g1, qd)), (q - 1.0) / p);
  const double rhs = tr.distance * grad * norms;

  auto rep = base_report(InequalityId::Expedient, phi.grid(), p, q);
  rep.solver = std::string(to_string(tr.solver));
  finish(rep, lhs, rhs, tr.distance_error() * grad * norms);
  rep.details.emplace_back("wasserstein", tr.distance);
  return rep;
}

ScalarField realize(const FieldSource& source, const GridPtr& grid) {
  if (source.function) return sample(grid, source.function, source.name);
  return ScalarField(grid, source.values, source.name);
}

// Adds the coarse-to-fine change of both sides to the fine error bar.
void merge_halving(InequalityReport& fine, const InequalityReport& coarse) {
  fine.error_bar += std::abs(fine.lhs - coarse.lhs) + std::abs(fine.rhs - coarse.rhs);
  fine.details.emplace_back("coarse_slack", coarse.slack);
}

}  // namespace

InequalityReport check_main(const ScalarField& f, double p, double q, const TransportOptions& transport) {
  const auto start = Clock::now();
  FieldAnalysis a(f, p, q, true);
  auto rep = a.main(transport);
  rep.runtime_ms = elapsed_ms(start);
  return rep;
}

InequalityReport check_moment(const ScalarField& f, double p, double q, std::size_t search_steps) {
  const auto start = Clock::now();
  FieldAnalysis a(f, p, q, true);
  auto rep = a.moment(search_steps);
  rep.runtime_ms = elapsed_ms(start);
  return rep;
}

InequalityReport check_triangle_bound(const ScalarField& f, double p, double q, std::span<const double> x0,
                                      const TransportOptions& transport) {
  const auto start = Clock::now();
  FieldAnalysis a(f, p, q, true);
  auto rep = a.triangle(x0, transport);
  rep.runtime_ms = elapsed_ms(start);
  return rep;
}

InequalityReport check_expedient(const ScalarField& phi, const ScalarField& f0, const ScalarField& f1, double p,
                                 double q, const TransportOptions& transport) {
  const auto start = Clock::now();
  auto rep = expedient_report(phi, f0, f1, p, q, transport);
  rep.runtime_ms = elapsed_ms(start);
  return rep;
}

InequalityReport check_nash(const ScalarField& f, double p, double q, const TransportOptions& transport) {
  const auto start = Clock::now();
  FieldAnalysis a(f, p, q, true);
  auto rep = a.nash(transport);
  rep.runtime_ms = elapsed_ms(start);
  return rep;
}

InequalityReport check_pw(const ScalarField& f, double p, double q) {
  const auto start = Clock::now();
  auto rep = pw_report(f, p, q);
  rep.runtime_ms = elapsed_ms(start);
  return rep;
}

std::array<InequalityReport, 2> check_eigen_bound(const ConvexDomain& domain, double p, std::size_t resolution,
                                                  const EigenOptions& options) {
  const auto start = Clock::now();
  const auto est = estimate_eigenvalue(domain, p, resolution, options);
  const double diam = domain.diameter();
  const double dp = std::pow(diam, p);
  const double sharp = std::pow(pi_p(p), p);

  std::array<InequalityReport, 2> out;
  for (auto& rep : out) {
    rep.p = p;
    rep.domain = domain.label();
    rep.resolution = resolution;
    rep.solver = "eigen";
    rep.rhs = est.eigenvalue;
    rep.error_bar = est.error_bar;
    rep.details.emplace_back("eigenvalue_finest", est.levels.back().eigenvalue);
    rep.details.emplace_back("order", est.order);
    rep.details.emplace_back("sharp_ratio", est.eigenvalue * dp / sharp);
  }
  out[0].id = InequalityId::EigenPw;
  out[0].lhs = std::pow(2.0, p - 1.0) / dp;
  out[1].id = InequalityId::EigenSharp;
  out[1].lhs = sharp / dp;
  for (auto& rep : out) {
    rep.slack = rep.rhs - rep.lhs;
    rep.error_bar += roundoff(rep.lhs, rep.rhs);
    rep.runtime_ms = elapsed_ms(start);
  }
  return out;
}

std::vector<double> diameter_candidates(const ConvexDomain& domain, std::size_t count) {
  const auto ends = domain.diameter_endpoints();
  const std::size_t dim = domain.dim();
  std::vector<double> out;
  out.reserve(count * dim);
  for (std::size_t c = 0; c < count; ++c) {
    const double s = count == 1 ? 0.5 : static_cast<double>(c) / static_cast<double>(count - 1);
    for (std::size_t k = 0; k < dim; ++k) out.push_back((1.0 - s) * ends[0][k] + s * ends[1][k]);
  }
  return out;
}

MomentMinimum minimize_moment(const ConvexDomain& domain, std::span<const double> points,
                              std::span<const double> weights, double r, std::size_t search_steps) {
  const std::size_t dim = domain.dim();
  if (points.size() != weights.size() * dim) throw Error(ErrorCode::DimensionMismatch, "points do not match weights");
  auto objective = [&](std::span<const double> x0) {
    double s = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        const double d = points[i * dim + k] - x0[k];
        d2 += d * d;
      }
      if (d2 > 0.0) s += weights[i] * std::pow(d2, 0.5 * r);
    }
    return s;
  };
  const auto& lo = domain.lower();
  const auto& hi = domain.upper();
  MomentMinimum best;
  best.x0.assign(dim, 0.0);

  if (dim == 1) {
    double x = 0.0;
    best.value = golden_section([&](double t) { return objective(std::span<const double>(&t, 1)); }, lo[0], hi[0],
                                search_steps, x);
    best.x0[0] = x;
    return best;
  }
  if (dim == 2) {
    // Partial minimization over a chord keeps the outer map convex.
    auto chord = [&](double x) -> std::pair<double, double> {
      if (domain.kind() == DomainKind::Polygon) return polygon_chord(domain.polygon_vertices(), x);
      return {lo[1], hi[1]};
    };
    auto inner = [&](double x, double& y_best) {
      const auto [ylo, yhi] = chord(x);
      return golden_section(
          [&](double y) {
            const double pt[2] = {x, y};
            return objective(pt);
          },
          ylo, yhi, search_steps, y_best);
    };
    double x = 0.0, y = 0.0;
    best.value = golden_section(
        [&](double t) {
          double yy = 0.0;
          return inner(t, yy);
        },
        lo[0], hi[0], search_steps, x);
    inner(x, y);
    best.x0 = {x, y};
    return best;
  }

  // Boxes in higher dimension: cyclic coordinate search, then a compass pass.
  std::vector<double> x0 = domain.centroid();
  double value = objective(x0);
  for (int sweep = 0; sweep < 30; ++sweep) {
    const double before = value;
    for (std::size_t k = 0; k < dim; ++k) {
      double arg = x0[k];
      value = golden_section(
          [&](double t) {
            std::vector<double> y(x0);
            y[k] = t;
            return objective(y);
          },
          lo[k], hi[k], search_steps, arg);
      x0[k] = arg;
    }
    if (before - value <= 1e-15 * std::abs(value)) break;
  }
  double step = 0.25 * domain.diameter();
  while (step > 1e-12 * domain.diameter()) {
    bool improved = false;
    for (std::size_t k = 0; k < dim; ++k) {
      for (double s : {-step, step}) {
        std::vector<double> y(x0);
        y[k] = std::clamp(y[k] + s, lo[k], hi[k]);
        const double v = objective(y);
        if (v < value) {
          value = v;
          x0 = y;
          improved = true;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  best.x0 = x0;
  best.value = value;
  return best;
}

std::vector<InequalityReport> certify(const CertifyRequest& request) {
  const auto start = Clock::now();
  require_exponents(request.p, request.q);
  if (!request.field.function && request.field.values.empty()) {
    throw Error(ErrorCode::InvalidArgument, "certify needs a field");
  }
  const bool halving = request.halving && request.field.function && request.resolution / 2 >= 2;
  std::vector<std::size_t> levels{request.resolution};
  if (halving) levels.push_back(request.resolution / 2);

  std::vector<std::vector<InequalityReport>> per_level;
  for (std::size_t res : levels) {
    const GridPtr grid = discretize(request.domain, res);
    ScalarField raw = realize(request.field, grid);
    const ScalarField f = request.shift ? raw.shifted(q_shift(raw, request.q)) : raw;
    std::optional<FieldAnalysis> analysis;
    std::vector<InequalityReport> reports;
    for (InequalityId id : request.checks) {
      auto needs_analysis = [&]() -> FieldAnalysis& {
        if (!analysis) analysis.emplace(f, request.p, request.q, true);
        return *analysis;
      };
      switch (id) {
        case InequalityId::Main: reports.push_back(needs_analysis().main(request.transport)); break;
        case InequalityId::Moment: reports.push_back(needs_analysis().moment(60)); break;
        case InequalityId::Triangle: {
          const auto cands = diameter_candidates(request.domain, request.triangle_candidates);
          reports.push_back(needs_analysis().triangle(cands, request.transport));
          break;
        }
        case InequalityId::Nash: reports.push_back(needs_analysis().nash(request.transport)); break;
        case InequalityId::Pw: reports.push_back(pw_report(raw, request.p, request.q)); break;
        default:
          throw Error(ErrorCode::InvalidArgument,
                      "inequality '" + std::string(to_string(id)) + "' is not a single-field check");
      }
    }
    per_level.push_back(std::move(reports));
  }
  auto out = std::move(per_level.front());
  if (per_level.size() > 1) {
    for (std::size_t i = 0; i < out.size(); ++i) merge_halving(out[i], per_level[1][i]);
  }
  const double ms = elapsed_ms(start);
  for (auto& r : out) r.runtime_ms = ms;
  return out;
}

InequalityReport certify_expedient(const ExpedientRequest& request) {
  const auto start = Clock::now();
  std::vector<std::size_t> levels{request.resolution};
  if (request.halving && request.resolution / 2 >= 2) levels.push_back(request.resolution / 2);
  std::vector<InequalityReport> reps;
  for (std::size_t res : levels) {
    const GridPtr grid = discretize(request.domain, res);
    reps.push_back(expedient_report(sample(grid, request.phi, "phi"), sample(grid, request.f0, "f0"),
                                    sample(grid, request.f1, "f1"), request.p, request.q, request.transport));
  }
  if (reps.size() > 1) merge_halving(reps[0], reps[1]);
  reps[0].runtime_ms = elapsed_ms(start);
  return reps[0];
}

ScalingReport thin_box_scaling(double p, double q, std::span<const std::size_t> n_list, std::size_t resolution) {
  require_exponents(p, q);
  if (n_list.size() < 3) throw Error(ErrorCode::InvalidArgument, "scaling fit needs at least 3 boxes");
  ScalingReport rep;
  rep.p = p;
  rep.q = q;
  rep.target = (p - q) / q;
  for (std::size_t n : n_list) {
    if (n == 0) throw Error(ErrorCode::InvalidArgument, "box aspect n must be positive");
    const auto box = ConvexDomain::box({0.0, 0.0}, {1.0, 1.0 / static_cast<double>(n)});
    const GridPtr grid = discretize(box, resolution);
    const ScalarField phi = sample(grid, [](std::span<const double> x) { return x[0]; }, "x1");
    const double t = q_shift(phi, q);
    const double numerator = std::pow(lr_norm(phi.shifted(t), q), p / q);
    rep.n.push_back(n);
    rep.volume.push_back(grid->total_volume());
    rep.ratio.push_back(numerator / dirichlet_energy(phi, p));
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(rep.n.size());
  for (std::size_t i = 0; i < rep.n.size(); ++i) {
    const double x = std::log(rep.volume[i]), y = std::log(rep.ratio[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  rep.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  return rep;
}

}  // namespace otpw
