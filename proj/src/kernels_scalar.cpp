#include <algorithm>
#include <cmath>
#include <limits>

#include "otpw/kernels.hpp"

namespace otpw::kernels {

namespace {

void squared_distances(const double* xs, std::size_t n, const double* ys, std::size_t m, std::size_t dim,
                       double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        const double d = xs[i * dim + k] - ys[j * dim + k];
        s += d * d;
      }
      out[i * m + j] = s;
    }
  }
}

void row_logsumexp(const double* cost, std::size_t rows, std::size_t cols, const double* dual, double inv_eps,
                   double* out) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double* c = cost + i * cols;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < cols; ++j) mx = std::max(mx, (dual[j] - c[j]) * inv_eps);
    double s = 0.0;
    for (std::size_t j = 0; j < cols; ++j) s += std::exp((dual[j] - c[j]) * inv_eps - mx);
    out[i] = mx + std::log(s);
  }
}

void exp_affine_row(const double* cost_row, std::size_t cols, double row_dual, const double* col_dual,
                    double inv_eps, double* out) {
  for (std::size_t j = 0; j < cols; ++j) out[j] = std::exp((row_dual + col_dual[j] - cost_row[j]) * inv_eps);
}

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{"scalar", squared_distances, row_logsumexp, exp_affine_row, dot};
  return table;
}

}  // namespace otpw::kernels
