#pragma once

// Independent reference computations. None of these call into the library's
// solvers; they share only plain data.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

namespace oracle {

inline double signed_pow(double x, double e) { return x < 0.0 ? -std::pow(-x, e) : std::pow(x, e); }

// First Neumann eigenvalue of -(|u'|^{p-2} u')' = mu |u|^{p-2} u on (0, len)
// by shooting: with w = |u'|^{p-2} u', u(0) = 1, w(0) = 0, integrate by RK4
// and bisect on the sign of w(len).
inline double shooting_eigenvalue(double p, double len = 1.0, int steps = 20000) {
  auto endpoint_flux = [&](double mu) {
    const double h = len / steps;
    double u = 1.0, w = 0.0;
    auto du = [&](double, double ww) { return signed_pow(ww, 1.0 / (p - 1.0)); };
    auto dw = [&](double uu, double) { return -mu * signed_pow(uu, p - 1.0); };
    for (int i = 0; i < steps; ++i) {
      const double k1u = du(u, w), k1w = dw(u, w);
      const double k2u = du(u + 0.5 * h * k1u, w + 0.5 * h * k1w), k2w = dw(u + 0.5 * h * k1u, w + 0.5 * h * k1w);
      const double k3u = du(u + 0.5 * h * k2u, w + 0.5 * h * k2w), k3w = dw(u + 0.5 * h * k2u, w + 0.5 * h * k2w);
      const double k4u = du(u + h * k3u, w + h * k3w), k4w = dw(u + h * k3u, w + h * k3w);
      u += h / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u);
      w += h / 6.0 * (k1w + 2 * k2w + 2 * k3w + k4w);
    }
    return w;
  };
  // Bracket the first sign change of w(len) from below.
  double lo = 1e-3, hi = 1.0;
  while (endpoint_flux(hi) < 0.0) {
    lo = hi;
    hi *= 1.5;
  }
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (endpoint_flux(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline double pi_p(double p) {
  return 2.0 * std::numbers::pi * std::pow(p - 1.0, 1.0 / p) / (p * std::sin(std::numbers::pi / p));
}

// Minimum transport cost between a (3 weights) and b (3 weights) with cost
// matrix c (row-major 3x3), by enumerating every basis of 5 cells, solving
// the marginal equations exactly and keeping the nonnegative solutions.
inline double brute_force_3x3(const std::vector<double>& a, const std::vector<double>& b, const std::vector<double>& c) {
  double best = std::numeric_limits<double>::infinity();
  for (int mask = 0; mask < (1 << 9); ++mask) {
    if (__builtin_popcount(static_cast<unsigned>(mask)) != 5) continue;
    std::vector<int> cells;
    for (int k = 0; k < 9; ++k) {
      if (mask & (1 << k)) cells.push_back(k);
    }
    // Rows: 3 row sums and the first 2 column sums (the last is implied).
    double m[5][6] = {};
    for (int e = 0; e < 5; ++e) {
      const int i = cells[e] / 3, j = cells[e] % 3;
      m[i][e] = 1.0;
      if (j < 2) m[3 + j][e] = 1.0;
    }
    for (int i = 0; i < 3; ++i) m[i][5] = a[i];
    for (int j = 0; j < 2; ++j) m[3 + j][5] = b[j];
    bool singular = false;
    for (int col = 0; col < 5 && !singular; ++col) {
      int piv = col;
      for (int r = col + 1; r < 5; ++r) {
        if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
      }
      if (std::abs(m[piv][col]) < 1e-12) {
        singular = true;
        break;
      }
      for (int k = 0; k < 6; ++k) std::swap(m[col][k], m[piv][k]);
      for (int r = 0; r < 5; ++r) {
        if (r == col) continue;
        const double f = m[r][col] / m[col][col];
        for (int k = 0; k < 6; ++k) m[r][k] -= f * m[col][k];
      }
    }
    if (singular) continue;
    double cost = 0.0;
    bool feasible = true;
    for (int e = 0; e < 5; ++e) {
      const double x = m[e][5] / m[e][e];
      if (x < -1e-14) feasible = false;
      cost += x * c[cells[e]];
    }
    if (feasible) best = std::min(best, cost);
  }
  return best;
}

// Minimizer of a convex function on [lo, hi]: dense scan, then golden section
// on the bracketing interval.
inline double scan_minimize(const std::function<double(double)>& f, double lo, double hi, int samples = 2001) {
  int best = 0;
  double fbest = std::numeric_limits<double>::infinity();
  for (int i = 0; i < samples; ++i) {
    const double x = lo + (hi - lo) * i / (samples - 1);
    const double fx = f(x);
    if (fx < fbest) {
      fbest = fx;
      best = i;
    }
  }
  double a = lo + (hi - lo) * std::max(best - 1, 0) / (samples - 1);
  double b = lo + (hi - lo) * std::min(best + 1, samples - 1) / (samples - 1);
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 200; ++it) {
    const double c = b - g * (b - a), d = a + g * (b - a);
    if (f(c) <= f(d)) {
      b = d;
    } else {
      a = c;
    }
  }
  return 0.5 * (a + b);
}

}  // namespace oracle
