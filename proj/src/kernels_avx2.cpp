#include <cmath>
#include <limits>
#include <vector>

#include "otpw/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define OTPW_HAVE_X86 1
#include <immintrin.h>
#else
#define OTPW_HAVE_X86 0
#endif

namespace otpw::kernels {

#if OTPW_HAVE_X86

#define OTPW_AVX2 __attribute__((target("avx2,fma")))

namespace {

// exp for doubles: x = n ln2 + r with |r| <= ln2/2, degree-13 Taylor on r,
// then scale by 2^n through the exponent bits. Inputs below the normal range
// flush to zero; every caller feeds nonpositive or moderate arguments.
OTPW_AVX2 inline __m256d exp256(__m256d x) {
  const __m256d hi = _mm256_set1_pd(709.0);
  const __m256d lo = _mm256_set1_pd(-708.0);
  const __m256d underflow = _mm256_cmp_pd(x, lo, _CMP_LT_OQ);
  x = _mm256_min_pd(_mm256_max_pd(x, lo), hi);

  const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(1.4426950408889634)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(6.93147180369123816490e-01), x);
  r = _mm256_fnmadd_pd(n, _mm256_set1_pd(1.90821492927058770002e-10), r);

  __m256d p = _mm256_set1_pd(1.0 / 6227020800.0);
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 479001600.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 39916800.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 3628800.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 362880.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 40320.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 5040.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 720.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 120.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 24.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 6.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(0.5));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));

  // Round-to-integer via the 1.5 * 2^52 magic constant, then build 2^n.
  const __m256d magic = _mm256_set1_pd(6755399441055744.0);
  const __m256i ni = _mm256_sub_epi64(_mm256_castpd_si256(_mm256_add_pd(n, magic)), _mm256_castpd_si256(magic));
  const __m256i bits = _mm256_slli_epi64(_mm256_add_epi64(ni, _mm256_set1_epi64x(1023)), 52);
  const __m256d result = _mm256_mul_pd(p, _mm256_castsi256_pd(bits));
  return _mm256_andnot_pd(underflow, result);
}

OTPW_AVX2 inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

OTPW_AVX2 inline double hmax(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d m = _mm_max_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_max_sd(m, _mm_unpackhi_pd(m, m)));
}

OTPW_AVX2 void squared_distances(const double* xs, std::size_t n, const double* ys, std::size_t m,
                                 std::size_t dim, double* out) {
  // Coordinate-major copy of ys so four targets load as one vector.
  std::vector<double> yt(dim * m);
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t k = 0; k < dim; ++k) yt[k * m + j] = ys[j * dim + k];
  }
  for (std::size_t i = 0; i < n; ++i) {
    double* row = out + i * m;
    std::size_t j = 0;
    for (; j + 4 <= m; j += 4) {
      __m256d acc = _mm256_setzero_pd();
      for (std::size_t k = 0; k < dim; ++k) {
        const __m256d d = _mm256_sub_pd(_mm256_set1_pd(xs[i * dim + k]), _mm256_loadu_pd(&yt[k * m + j]));
        acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
      }
      _mm256_storeu_pd(row + j, acc);
    }
    for (; j < m; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        const double d = xs[i * dim + k] - ys[j * dim + k];
        s += d * d;
      }
      row[j] = s;
    }
  }
}

OTPW_AVX2 void row_logsumexp(const double* cost, std::size_t rows, std::size_t cols, const double* dual,
                             double inv_eps, double* out) {
  const __m256d scale = _mm256_set1_pd(inv_eps);
  for (std::size_t i = 0; i < rows; ++i) {
    const double* c = cost + i * cols;
    __m256d vmax = _mm256_set1_pd(-std::numeric_limits<double>::infinity());
    std::size_t j = 0;
    for (; j + 4 <= cols; j += 4) {
      const __m256d z = _mm256_mul_pd(_mm256_sub_pd(_mm256_loadu_pd(dual + j), _mm256_loadu_pd(c + j)), scale);
      vmax = _mm256_max_pd(vmax, z);
    }
    double mx = hmax(vmax);
    for (std::size_t t = j; t < cols; ++t) mx = std::max(mx, (dual[t] - c[t]) * inv_eps);

    const __m256d vm = _mm256_set1_pd(mx);
    __m256d acc = _mm256_setzero_pd();
    for (j = 0; j + 4 <= cols; j += 4) {
      const __m256d z = _mm256_mul_pd(_mm256_sub_pd(_mm256_loadu_pd(dual + j), _mm256_loadu_pd(c + j)), scale);
      acc = _mm256_add_pd(acc, exp256(_mm256_sub_pd(z, vm)));
    }
    double s = hsum(acc);
    for (std::size_t t = j; t < cols; ++t) s += std::exp((dual[t] - c[t]) * inv_eps - mx);
    out[i] = mx + std::log(s);
  }
}

OTPW_AVX2 void exp_affine_row(const double* cost_row, std::size_t cols, double row_dual, const double* col_dual,
                              double inv_eps, double* out) {
  const __m256d scale = _mm256_set1_pd(inv_eps);
  const __m256d f = _mm256_set1_pd(row_dual);
  std::size_t j = 0;
  for (; j + 4 <= cols; j += 4) {
    const __m256d z = _mm256_mul_pd(
        _mm256_sub_pd(_mm256_add_pd(f, _mm256_loadu_pd(col_dual + j)), _mm256_loadu_pd(cost_row + j)), scale);
    _mm256_storeu_pd(out + j, exp256(z));
  }
  for (; j < cols; ++j) out[j] = std::exp((row_dual + col_dual[j] - cost_row[j]) * inv_eps);
}

OTPW_AVX2 double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

const KernelTable* avx2_table() {
  static const KernelTable table{"avx2", squared_distances, row_logsumexp, exp_affine_row, dot};
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? &table : nullptr;
}

#else

const KernelTable* avx2_table() { return nullptr; }

#endif

}  // namespace otpw::kernels
