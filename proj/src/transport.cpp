#include "otpw/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "otpw/error.hpp"
#include "otpw/format.hpp"
#include "otpw/kernels.hpp"

namespace otpw {

std::string_view to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::Auto: return "auto";
    case SolverKind::Exact: return "exact";
    case SolverKind::Entropic: return "entropic";
    case SolverKind::Quantile1D: return "1d";
  }
  return "auto";
}

SolverKind parse_solver(std::string_view name) {
  if (name == "auto") return SolverKind::Auto;
  if (name == "exact") return SolverKind::Exact;
  if (name == "entropic") return SolverKind::Entropic;
  if (name == "1d") return SolverKind::Quantile1D;
  throw Error(ErrorCode::ConfigInvalid,
              "unknown solver '" + std::string(name) + "' (expected auto, exact, entropic or 1d)");
}

namespace {

void check_exponent(double m) {
  if (!(m >= 1.0) || !std::isfinite(m)) throw Error(ErrorCode::InvalidArgument, "cost exponent must be >= 1");
}

void check_dims(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  if (mu.dim() != nu.dim()) throw Error(ErrorCode::DimensionMismatch, "measures live in different dimensions");
}

double ground_cost(std::span<const double> x, std::span<const double> y, double m) {
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double d = x[k] - y[k];
    s += d * d;
  }
  if (m == 2.0) return s;
  return s > 0.0 ? std::pow(s, 0.5 * m) : 0.0;
}

double root(double cost, double m) { return cost > 0.0 ? std::pow(cost, 1.0 / m) : 0.0; }

// Measure restricted to its positive-weight atoms, with the original indices.
struct Support {
  std::vector<double> positions;
  std::vector<double> weights;
  std::vector<std::size_t> index;
};

Support positive_support(const DiscreteMeasure& mu) {
  Support s;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (mu.weight(i) > 0.0) {
      const auto x = mu.position(i);
      s.positions.insert(s.positions.end(), x.begin(), x.end());
      s.weights.push_back(mu.weight(i));
      s.index.push_back(i);
    }
  }
  return s;
}

std::vector<double> cost_between(std::span<const double> xs, std::size_t n, std::span<const double> ys,
                                 std::size_t m, std::size_t dim, double exponent) {
  std::vector<double> c(n * m);
  kernels::active().squared_distances(xs.data(), n, ys.data(), m, dim, c.data());
  if (exponent != 2.0) {
    for (double& v : c) v = v > 0.0 ? std::pow(v, 0.5 * exponent) : 0.0;
  }
  return c;
}

}  // namespace

TransportPlan::TransportPlan(DiscreteMeasure source, DiscreteMeasure target, std::vector<PlanEntry> entries,
                             double exponent)
    : source_(std::move(source)), target_(std::move(target)), entries_(std::move(entries)), exponent_(exponent) {
  check_dims(source_, target_);
  for (const auto& e : entries_) {
    if (e.source >= source_.size() || e.target >= target_.size()) {
      throw Error(ErrorCode::InvalidArgument, "plan entry out of range");
    }
    if (!(e.weight >= 0.0) || !std::isfinite(e.weight)) {
      throw Error(ErrorCode::InvalidArgument, "plan weights must be finite and nonnegative");
    }
  }
}

double TransportPlan::distance() const { return root(plan_cost(*this, exponent_), exponent_); }

double TransportPlan::marginal_error() const {
  std::vector<double> rows(source_.size(), 0.0), cols(target_.size(), 0.0);
  for (const auto& e : entries_) {
    rows[e.source] += e.weight;
    cols[e.target] += e.weight;
  }
  double err = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) err = std::max(err, std::abs(rows[i] - source_.weight(i)));
  for (std::size_t j = 0; j < cols.size(); ++j) err = std::max(err, std::abs(cols[j] - target_.weight(j)));
  return err;
}

double plan_cost(const TransportPlan& plan, double m) {
  check_exponent(m);
  double s = 0.0;
  for (const auto& e : plan.entries()) {
    if (e.weight > 0.0) s += e.weight * ground_cost(plan.source().position(e.source), plan.target().position(e.target), m);
  }
  return s;
}

std::vector<double> cost_matrix(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double m) {
  check_dims(mu, nu);
  check_exponent(m);
  return cost_between(mu.positions(), mu.size(), nu.positions(), nu.size(), mu.dim(), m);
}

double TransportResult::distance_error() const {
  const double m = plan.exponent();
  return std::max(0.0, distance - root(std::max(cost_lower, 0.0), m));
}

TransportResult monotone_transport_1d(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double m) {
  if (mu.dim() != 1 || nu.dim() != 1) throw Error(ErrorCode::DimensionMismatch, "quantile solver needs 1D measures");
  check_exponent(m);
  auto order = [](const DiscreteMeasure& a) {
    std::vector<std::size_t> idx(a.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t i, std::size_t j) { return a.position(i)[0] < a.position(j)[0]; });
    return idx;
  };
  const auto ia = order(mu), ib = order(nu);

  // Walk both quantile functions together; each step moves the smaller of
  // the two remaining atom masses.
  std::vector<PlanEntry> entries;
  double cost = 0.0;
  std::size_t i = 0, j = 0;
  double ra = ia.empty() ? 0.0 : mu.weight(ia[0]);
  double rb = ib.empty() ? 0.0 : nu.weight(ib[0]);
  while (i < ia.size() && j < ib.size()) {
    const double w = std::min(ra, rb);
    if (w > 0.0) {
      const double d = std::abs(mu.position(ia[i])[0] - nu.position(ib[j])[0]);
      cost += w * (m == 2.0 ? d * d : std::pow(d, m));
      entries.push_back({ia[i], ib[j], w});
    }
    ra -= w;
    rb -= w;
    // w is one of the two remainders, so at least one side hits zero exactly.
    if (ra <= 0.0 && ++i < ia.size()) ra = mu.weight(ia[i]);
    if (rb <= 0.0 && ++j < ib.size()) rb = nu.weight(ib[j]);
  }
  TransportResult r{root(cost, m), cost, cost * (1.0 - 1e-13), SolverKind::Quantile1D, entries.size(),
                    TransportPlan(mu, nu, std::move(entries), m)};
  return r;
}

double wasserstein_1d(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double m) {
  return monotone_transport_1d(mu, nu, m).distance;
}

TransportResult wasserstein_exact(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double m,
                                  std::size_t pair_cap) {
  check_dims(mu, nu);
  check_exponent(m);
  const Support a = positive_support(mu), b = positive_support(nu);
  const std::size_t n = a.weights.size(), k = b.weights.size();
  if (n * k > pair_cap) {
    throw Error(ErrorCode::TooLarge, std::to_string(n) + "x" + std::to_string(k) +
                                         " atom pairs exceed the exact-solver cap of " + std::to_string(pair_cap));
  }
  const auto cost = cost_between(a.positions, n, b.positions, k, mu.dim(), m);
  TransportSimplex simplex(a.weights, b.weights, cost);
  simplex.solve();

  std::vector<PlanEntry> entries;
  for (const auto& e : simplex.nonzero_flows()) entries.push_back({a.index[e.source], b.index[e.target], e.weight});
  const double objective = simplex.objective();
  // Dual infeasibility bounds the optimality gap because the total flow is 1.
  const double gap = std::max(0.0, -simplex.min_reduced_cost()) + 1e-14 * objective;
  TransportResult r{root(objective, m), objective, std::max(0.0, objective - gap), SolverKind::Exact,
                    simplex.pivots(), TransportPlan(mu, nu, std::move(entries), m)};
  return r;
}

namespace {

// Gibbs plan exp((f_i + g_j - c_ij) / eps) with its row and column sums.
void gibbs_plan(const kernels::KernelTable& kern, const std::vector<double>& c, const std::vector<double>& f,
                const std::vector<double>& g, double eps, std::vector<double>& plan, std::vector<double>& rows,
                std::vector<double>& cols) {
  const std::size_t n = f.size(), k = g.size();
  plan.resize(n * k);
  rows.assign(n, 0.0);
  cols.assign(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double* row = plan.data() + i * k;
    kern.exp_affine_row(c.data() + i * k, k, f[i], g.data(), 1.0 / eps, row);
    for (std::size_t j = 0; j < k; ++j) {
      rows[i] += row[j];
      cols[j] += row[j];
    }
  }
}

double marginal_gap(const std::vector<double>& a, const std::vector<double>& b, const std::vector<double>& rows,
                    const std::vector<double>& cols) {
  double ra = 0.0, rb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) ra += std::abs(a[i] - rows[i]);
  for (std::size_t j = 0; j < b.size(); ++j) rb += std::abs(b[j] - cols[j]);
  const double gap = std::max(ra, rb);
  return std::isfinite(gap) ? gap : std::numeric_limits<double>::infinity();
}

struct Polish {
  double residual;
  std::size_t steps;
};

// Damped Newton steps on the entropic dual. The Hessian [[diag r, P], [P^T,
// diag s]] is applied matrix-free and inverted by Jacobi-preconditioned CG;
// its null vector (1, -1) is orthogonal to the gradient, so the system stays
// consistent. Stops at `tol`, after `budget` steps, or once a step gains less
// than a factor 2.
Polish newton_polish(const kernels::KernelTable& kern, const std::vector<double>& c, const std::vector<double>& a,
                     const std::vector<double>& b, std::vector<double>& f, std::vector<double>& g, double eps,
                     double tol, std::size_t budget) {
  const std::size_t n = f.size(), k = g.size(), dim = n + k;
  std::vector<double> plan, rows, cols;
  gibbs_plan(kern, c, f, g, eps, plan, rows, cols);
  double residual = marginal_gap(a, b, rows, cols);
  std::size_t steps = 0;

  std::vector<double> rhs(dim), x(dim), res(dim), z(dim), dir(dim), hd(dim), diag(dim);
  auto apply = [&](const std::vector<double>& v, std::vector<double>& out) {
    for (std::size_t i = 0; i < n; ++i) {
      out[i] = rows[i] * v[i] + kern.dot(plan.data() + i * k, v.data() + n, k);
    }
    for (std::size_t j = 0; j < k; ++j) out[n + j] = cols[j] * v[n + j];
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = plan.data() + i * k;
      for (std::size_t j = 0; j < k; ++j) out[n + j] += row[j] * v[i];
    }
  };

  std::vector<double> f_try(n), g_try(k), plan_try, rows_try, cols_try;
  while (residual > tol && steps < budget) {
    for (std::size_t i = 0; i < n; ++i) rhs[i] = eps * (a[i] - rows[i]);
    for (std::size_t j = 0; j < k; ++j) rhs[n + j] = eps * (b[j] - cols[j]);
    for (std::size_t i = 0; i < n; ++i) diag[i] = std::max(rows[i], 1e-300);
    for (std::size_t j = 0; j < k; ++j) diag[n + j] = std::max(cols[j], 1e-300);

    std::fill(x.begin(), x.end(), 0.0);
    res = rhs;
    for (std::size_t t = 0; t < dim; ++t) z[t] = res[t] / diag[t];
    dir = z;
    double rz = std::inner_product(res.begin(), res.end(), z.begin(), 0.0);
    const double stop = 1e-20 * rz;
    for (std::size_t cg = 0; cg < 2 * dim && rz > stop; ++cg) {
      apply(dir, hd);
      const double curv = std::inner_product(dir.begin(), dir.end(), hd.begin(), 0.0);
      if (!(curv > 0.0)) break;
      const double alpha = rz / curv;
      for (std::size_t t = 0; t < dim; ++t) {
        x[t] += alpha * dir[t];
        res[t] -= alpha * hd[t];
        z[t] = res[t] / diag[t];
      }
      const double rz_next = std::inner_product(res.begin(), res.end(), z.begin(), 0.0);
      for (std::size_t t = 0; t < dim; ++t) dir[t] = z[t] + (rz_next / rz) * dir[t];
      rz = rz_next;
    }

    // Keep every exponent change below 40 so the trial plan cannot overflow.
    double largest = 0.0;
    for (double v : x) largest = std::max(largest, std::abs(v));
    double step = std::min(1.0, 20.0 * eps / std::max(largest, 1e-300));
    double trial = std::numeric_limits<double>::infinity();
    for (int halving = 0; halving < 30; ++halving, step *= 0.5) {
      for (std::size_t i = 0; i < n; ++i) f_try[i] = f[i] + step * x[i];
      for (std::size_t j = 0; j < k; ++j) g_try[j] = g[j] + step * x[n + j];
      gibbs_plan(kern, c, f_try, g_try, eps, plan_try, rows_try, cols_try);
      trial = marginal_gap(a, b, rows_try, cols_try);
      if (trial < residual) break;
    }
    ++steps;
    if (!(trial < residual)) break;
    const bool slow = trial > 0.5 * residual;
    f.swap(f_try);
    g.swap(g_try);
    plan.swap(plan_try);
    rows.swap(rows_try);
    cols.swap(cols_try);
    residual = trial;
    if (slow) break;
  }
  return {residual, steps};
}

}  // namespace

TransportResult wasserstein_entropic(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double m,
                                     const EntropicOptions& options) {
  check_dims(mu, nu);
  check_exponent(m);
  const Support sa = positive_support(mu), sb = positive_support(nu);
  const std::size_t n = sa.weights.size(), k = sb.weights.size();
  const auto& a = sa.weights;
  const auto& b = sb.weights;
  const auto c = cost_between(sa.positions, n, sb.positions, k, mu.dim(), m);
  const auto& kern = kernels::active();

  const double max_cost = *std::max_element(c.begin(), c.end());
  if (max_cost == 0.0) {
    // Every coupling is optimal; the product plan is the entropic one.
    std::vector<PlanEntry> entries;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < k; ++j) entries.push_back({sa.index[i], sb.index[j], a[i] * b[j]});
    }
    return {0.0, 0.0, 0.0, SolverKind::Entropic, 0, TransportPlan(mu, nu, std::move(entries), m)};
  }

  double target = options.epsilon;
  if (!(target > 0.0)) {
    std::vector<double> tmp(c);
    auto mid = tmp.begin() + static_cast<std::ptrdiff_t>(tmp.size() / 2);
    std::nth_element(tmp.begin(), mid, tmp.end());
    target = 1e-3 * (*mid > 0.0 ? *mid : max_cost);
  }
  target = std::min(target, max_cost);

  std::vector<double> ct(k * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) ct[j * n + i] = c[i * k + j];
  }
  std::vector<double> log_a(n), log_b(k);
  for (std::size_t i = 0; i < n; ++i) log_a[i] = std::log(a[i]);
  for (std::size_t j = 0; j < k; ++j) log_b[j] = std::log(b[j]);

  std::vector<double> f(n, 0.0), g(k, 0.0), lse_rows(n), lse_cols(k);
  const std::size_t steps = std::max<std::size_t>(1, options.anneal_steps);
  std::size_t iterations = 0;
  double residual = std::numeric_limits<double>::infinity();
  double eps = max_cost;
  for (std::size_t s = 0; s < steps; ++s) {
    const double frac = steps == 1 ? 1.0 : static_cast<double>(s) / static_cast<double>(steps - 1);
    eps = max_cost * std::pow(target / max_cost, frac);
    const bool last = s + 1 == steps;
    const double tol = options.tolerance;
    const double inv = 1.0 / eps;
    // Sinkhorn stalls when the Gibbs plan splits into weakly coupled blocks;
    // a window that fails to gain a factor 10 hands over to Newton steps.
    constexpr std::size_t kWindow = 64;
    double window_start = std::numeric_limits<double>::infinity();
    residual = std::numeric_limits<double>::infinity();
    for (std::size_t it = 0; it < options.rounds; ++it) {
      if (it > 0 && it % kWindow == 0) {
        if (residual > 0.1 * window_start) {
          const auto polish = newton_polish(kern, c, a, b, f, g, eps, tol, options.rounds - it);
          residual = polish.residual;
          iterations += polish.steps;
          it += polish.steps;
          if (residual <= tol) break;
        }
        window_start = residual;
      }
      kern.row_logsumexp(c.data(), n, k, g.data(), inv, lse_rows.data());
      if (it > 0) {
        double rows = 0.0;
        for (std::size_t i = 0; i < n; ++i) rows += std::abs(a[i] - std::exp(f[i] * inv + lse_rows[i]));
        residual = rows;
        if (rows <= tol) {
          kern.row_logsumexp(ct.data(), k, n, f.data(), inv, lse_cols.data());
          double cols = 0.0;
          for (std::size_t j = 0; j < k; ++j) cols += std::abs(b[j] - std::exp(g[j] * inv + lse_cols[j]));
          residual = std::max(rows, cols);
          if (residual <= tol) break;
        }
      }
      for (std::size_t i = 0; i < n; ++i) f[i] = eps * (log_a[i] - lse_rows[i]);
      kern.row_logsumexp(ct.data(), k, n, f.data(), inv, lse_cols.data());
      for (std::size_t j = 0; j < k; ++j) g[j] = eps * (log_b[j] - lse_cols[j]);
      ++iterations;
    }
    if (!(residual <= tol) && last) {
      throw Error(ErrorCode::NoConvergence, "Sinkhorn marginal residual " + format_double(residual) +
                                                " above " + format_double(tol) + " after " +
                                                std::to_string(options.rounds) + " rounds");
    }
  }

  // Dense plan, then rounding onto the transport polytope: scale rows and
  // columns down to their marginals and spread the deficit as a rank-one term.
  const double inv = 1.0 / eps;
  std::vector<double> plan(n * k);
  for (std::size_t i = 0; i < n; ++i) kern.exp_affine_row(c.data() + i * k, k, f[i], g.data(), inv, plan.data() + i * k);
  for (std::size_t i = 0; i < n; ++i) {
    double r = 0.0;
    for (std::size_t j = 0; j < k; ++j) r += plan[i * k + j];
    if (r > a[i]) {
      const double s = a[i] / r;
      for (std::size_t j = 0; j < k; ++j) plan[i * k + j] *= s;
    }
  }
  std::vector<double> col(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) col[j] += plan[i * k + j];
  }
  for (std::size_t j = 0; j < k; ++j) {
    if (col[j] > b[j]) {
      const double s = b[j] / col[j];
      for (std::size_t i = 0; i < n; ++i) plan[i * k + j] *= s;
    }
  }
  std::vector<double> da(n), db(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double r = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      r += plan[i * k + j];
      db[j] += plan[i * k + j];
    }
    da[i] = std::max(0.0, a[i] - r);
  }
  double deficit = 0.0;
  for (std::size_t j = 0; j < k; ++j) db[j] = std::max(0.0, b[j] - db[j]);
  for (double v : da) deficit += v;
  if (deficit > 0.0) {
    for (std::size_t i = 0; i < n; ++i) {
      if (da[i] == 0.0) continue;
      const double s = da[i] / deficit;
      for (std::size_t j = 0; j < k; ++j) plan[i * k + j] += s * db[j];
    }
  }

  double cost = 0.0;
  std::vector<PlanEntry> entries;
  for (std::size_t i = 0; i < n; ++i) {
    cost += kern.dot(plan.data() + i * k, c.data() + i * k, k);
    for (std::size_t j = 0; j < k; ++j) {
      if (plan[i * k + j] > 0.0) entries.push_back({sa.index[i], sb.index[j], plan[i * k + j]});
    }
  }

  // Feasible dual: c-transform g from f, then f back from g.
  std::vector<double> gt(k, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) gt[j] = std::min(gt[j], c[i * k + j] - f[i]);
  }
  double lower = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double fi = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k; ++j) fi = std::min(fi, c[i * k + j] - gt[j]);
    lower += a[i] * fi;
  }
  for (std::size_t j = 0; j < k; ++j) lower += b[j] * gt[j];
  lower -= 1e-14 * max_cost * static_cast<double>(n + k);

  return {root(cost, m), cost, std::min(lower, cost), SolverKind::Entropic, iterations,
          TransportPlan(mu, nu, std::move(entries), m)};
}

TransportResult wasserstein(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double m,
                            const TransportOptions& options) {
  check_dims(mu, nu);
  switch (options.solver) {
    case SolverKind::Quantile1D: return monotone_transport_1d(mu, nu, m);
    case SolverKind::Exact: return wasserstein_exact(mu, nu, m, options.pair_cap);
    case SolverKind::Entropic: return wasserstein_entropic(mu, nu, m, options.entropic);
    case SolverKind::Auto: break;
  }
  if (mu.dim() == 1) return monotone_transport_1d(mu, nu, m);
  if (mu.size() * nu.size() <= options.pair_cap) return wasserstein_exact(mu, nu, m, options.pair_cap);
  return wasserstein_entropic(mu, nu, m, options.entropic);
}

void write_plan_csv(std::ostream& out, const TransportPlan& plan) {
  out << "i,j,weight\n";
  for (const auto& e : plan.entries()) out << e.source << ',' << e.target << ',' << format_double(e.weight) << '\n';
}

}  // namespace otpw
