#include "vtreid/simd/kernels.hpp"

namespace vtreid::simd {
namespace {

void gemm_scalar(int m, int n, int k, const double* a, int lda, const double* b, int ldb,
                 double beta, double* c, int ldc) {
  for (int i = 0; i < m; ++i) {
    double* crow = c + static_cast<std::ptrdiff_t>(i) * ldc;
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int p = 0; p < k; ++p) {
        acc += a[static_cast<std::ptrdiff_t>(i) * lda + p] * b[static_cast<std::ptrdiff_t>(p) * ldb + j];
      }
      crow[j] = (beta == 0.0 ? 0.0 : beta * crow[j]) + acc;
    }
  }
}

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double sum_scalar(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{Isa::scalar, gemm_scalar, dot_scalar, axpy_scalar, sum_scalar};
  return table;
}

}  // namespace vtreid::simd
