// Compiled with -mavx2 -mfma; only reached after cpu_has_avx2() succeeds.
#include <immintrin.h>

#include "vtreid/simd/kernels.hpp"

namespace vtreid::simd {
namespace {

inline __m256i lane_mask(int lanes) {
  alignas(32) static const long long table[8] = {-1, -1, -1, -1, 0, 0, 0, 0};
  return _mm256_loadu_si256(reinterpret_cast<const __m256i*>(table + 4 - lanes));
}

// R rows by (V full vectors + optional masked tail of `tail` lanes).
template <int R, int V>
inline void micro_kernel(int k, const double* a, int lda, const double* b, int ldb, double beta,
                         double* c, int ldc, int tail) {
  constexpr int W = V + 1;
  __m256d acc[R][W];
  for (int r = 0; r < R; ++r)
    for (int v = 0; v < W; ++v) acc[r][v] = _mm256_setzero_pd();
  const __m256i mask = lane_mask(tail > 0 ? tail : 4);
  for (int p = 0; p < k; ++p) {
    const double* brow = b + static_cast<std::ptrdiff_t>(p) * ldb;
    __m256d bv[W];
    for (int v = 0; v < V; ++v) bv[v] = _mm256_loadu_pd(brow + 4 * v);
    if (tail > 0) bv[V] = _mm256_maskload_pd(brow + 4 * V, mask);
    for (int r = 0; r < R; ++r) {
      const __m256d av = _mm256_broadcast_sd(a + static_cast<std::ptrdiff_t>(r) * lda + p);
      for (int v = 0; v < V; ++v) acc[r][v] = _mm256_fmadd_pd(av, bv[v], acc[r][v]);
      if (tail > 0) acc[r][V] = _mm256_fmadd_pd(av, bv[V], acc[r][V]);
    }
  }
  const __m256d betav = _mm256_set1_pd(beta);
  for (int r = 0; r < R; ++r) {
    double* crow = c + static_cast<std::ptrdiff_t>(r) * ldc;
    for (int v = 0; v < V; ++v) {
      __m256d out = acc[r][v];
      if (beta != 0.0) out = _mm256_add_pd(_mm256_mul_pd(betav, _mm256_loadu_pd(crow + 4 * v)), out);
      _mm256_storeu_pd(crow + 4 * v, out);
    }
    if (tail > 0) {
      __m256d out = acc[r][V];
      if (beta != 0.0) {
        out = _mm256_add_pd(_mm256_mul_pd(betav, _mm256_maskload_pd(crow + 4 * V, mask)), out);
      }
      _mm256_maskstore_pd(crow + 4 * V, mask, out);
    }
  }
}

template <int R>
inline void row_block(int n, int k, const double* a, int lda, const double* b, int ldb,
                      double beta, double* c, int ldc) {
  int j = 0;
  for (; j + 8 <= n; j += 8) micro_kernel<R, 2>(k, a, lda, b + j, ldb, beta, c + j, ldc, 0);
  const int rest = n - j;
  if (rest >= 4) {
    micro_kernel<R, 1>(k, a, lda, b + j, ldb, beta, c + j, ldc, rest - 4);
  } else if (rest > 0) {
    micro_kernel<R, 0>(k, a, lda, b + j, ldb, beta, c + j, ldc, rest);
  }
}

void gemm_avx2(int m, int n, int k, const double* a, int lda, const double* b, int ldb,
               double beta, double* c, int ldc) {
  int i = 0;
  for (; i + 4 <= m; i += 4) {
    row_block<4>(n, k, a + static_cast<std::ptrdiff_t>(i) * lda, lda, b, ldb, beta,
                 c + static_cast<std::ptrdiff_t>(i) * ldc, ldc);
  }
  for (; i < m; ++i) {
    row_block<1>(n, k, a + static_cast<std::ptrdiff_t>(i) * lda, lda, b, ldb, beta,
                 c + static_cast<std::ptrdiff_t>(i) * ldc, ldc);
  }
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d a0 = _mm256_setzero_pd();
  __m256d a1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), a0);
    a1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), a1);
  }
  double acc = hsum(_mm256_add_pd(a0, a1));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d av = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double sum_avx2(const double* x, std::size_t n) {
  __m256d a0 = _mm256_setzero_pd();
  __m256d a1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    a0 = _mm256_add_pd(a0, _mm256_loadu_pd(x + i));
    a1 = _mm256_add_pd(a1, _mm256_loadu_pd(x + i + 4));
  }
  double acc = hsum(_mm256_add_pd(a0, a1));
  for (; i < n; ++i) acc += x[i];
  return acc;
}

}  // namespace

const KernelTable& avx2_kernel_table() {
  static const KernelTable table{Isa::avx2, gemm_avx2, dot_avx2, axpy_avx2, sum_avx2};
  return table;
}

}  // namespace vtreid::simd
