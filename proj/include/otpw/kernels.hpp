#pragma once

#include <cstddef>
#include <string_view>

// Data-parallel inner loops of the transport solvers. Every kernel has a
// scalar reference implementation; wider variants are chosen at runtime from
// the CPU's capabilities and are equivalence-tested against the reference.
namespace otpw::kernels {

struct KernelTable {
  std::string_view name;

  /// out[i*m + j] = |x_i - y_j|^2 for atom-major xs (n x dim) and ys (m x dim).
  void (*squared_distances)(const double* xs, std::size_t n, const double* ys, std::size_t m,
                            std::size_t dim, double* out);

  /// out[i] = log sum_j exp((dual[j] - cost[i*cols + j]) * inv_eps), computed
  /// with the row maximum factored out.
  void (*row_logsumexp)(const double* cost, std::size_t rows, std::size_t cols, const double* dual,
                        double inv_eps, double* out);

  /// out[j] = exp((row_dual + col_dual[j] - cost_row[j]) * inv_eps)
  void (*exp_affine_row)(const double* cost_row, std::size_t cols, double row_dual, const double* col_dual,
                         double inv_eps, double* out);

  double (*dot)(const double* a, const double* b, std::size_t n);
};

const KernelTable& scalar_table();

/// Null when the binary or the CPU lacks AVX2+FMA.
const KernelTable* avx2_table();

/// Table selected for this process. The environment variable
/// OTPW_KERNELS=scalar forces the reference kernels.
const KernelTable& active();

}  // namespace otpw::kernels
