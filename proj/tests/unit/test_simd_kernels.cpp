#include <cmath>
#include <vector>

#include "doctest.h"
#include "vtreid/core/rng.hpp"
#include "vtreid/simd/kernels.hpp"

using namespace vtreid;
using simd::Isa;
using simd::Trans;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

struct IsaGuard {
  Isa saved = simd::active_isa();
  ~IsaGuard() { simd::select(saved); }
};

}  // namespace

TEST_CASE("scalar gemm matches a naive triple loop") {
  Rng rng(1);
  const int m = 5, n = 7, k = 3;
  auto a = random_vec(rng, m * k), b = random_vec(rng, k * n), c = random_vec(rng, m * n);
  auto expected = c;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      double acc = 0;
      for (int p = 0; p < k; ++p) acc += a[i * k + p] * b[p * n + j];
      expected[i * n + j] = 0.5 * expected[i * n + j] + acc;
    }
  simd::scalar_kernels().gemm(m, n, k, a.data(), k, b.data(), n, 0.5, c.data(), n);
  for (int i = 0; i < m * n; ++i) CHECK(c[i] == doctest::Approx(expected[i]).epsilon(1e-14));
}

TEST_CASE("AVX2 kernels agree with scalar reference") {
  const simd::KernelTable* avx = simd::avx2_kernels();
  if (avx == nullptr) {
    MESSAGE("AVX2 unavailable; equivalence test skipped");
    return;
  }
  const auto& ref = simd::scalar_kernels();
  Rng rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    const int m = 1 + static_cast<int>(rng.below(13));
    const int n = 1 + static_cast<int>(rng.below(37));
    const int k = 1 + static_cast<int>(rng.below(50));
    const int lda = k + static_cast<int>(rng.below(3));
    const int ldb = n + static_cast<int>(rng.below(3));
    const int ldc = n + static_cast<int>(rng.below(3));
    auto a = random_vec(rng, static_cast<std::size_t>(m) * lda);
    auto b = random_vec(rng, static_cast<std::size_t>(k) * ldb);
    auto c0 = random_vec(rng, static_cast<std::size_t>(m) * ldc);
    const double beta = trial % 3 == 0 ? 0.0 : rng.uniform(-1, 1);
    auto c_ref = c0, c_avx = c0;
    ref.gemm(m, n, k, a.data(), lda, b.data(), ldb, beta, c_ref.data(), ldc);
    avx->gemm(m, n, k, a.data(), lda, b.data(), ldb, beta, c_avx.data(), ldc);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < ldc; ++j) {
        const double r = c_ref[i * ldc + j], v = c_avx[i * ldc + j];
        if (j >= n) {
          // padding columns untouched
          REQUIRE(v == c0[i * ldc + j]);
        } else {
          REQUIRE(std::fabs(r - v) <= 1e-12 * (1.0 + std::fabs(r)) * k);
        }
      }
    }
    const std::size_t len = 1 + rng.below(100);
    auto x = random_vec(rng, len), y = random_vec(rng, len);
    CHECK(avx->dot(x.data(), y.data(), len) ==
          doctest::Approx(ref.dot(x.data(), y.data(), len)).epsilon(1e-12));
    CHECK(avx->sum(x.data(), len) == doctest::Approx(ref.sum(x.data(), len)).epsilon(1e-12));
    auto y1 = y, y2 = y;
    ref.axpy(0.3, x.data(), y1.data(), len);
    avx->axpy(0.3, x.data(), y2.data(), len);
    for (std::size_t i = 0; i < len; ++i) REQUIRE(std::fabs(y1[i] - y2[i]) < 1e-15);
  }
}

TEST_CASE("transposed gemm packing is consistent across variants") {
  IsaGuard guard;
  Rng rng(3);
  const int m = 6, n = 9, k = 11;
  auto at = random_vec(rng, k * m);  // stored k x m
  auto bt = random_vec(rng, n * k);  // stored n x k
  std::vector<double> expected(m * n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      double acc = 0;
      for (int p = 0; p < k; ++p) acc += at[p * m + i] * bt[j * k + p];
      expected[i * n + j] = acc;
    }
  for (Isa isa : {Isa::scalar, Isa::avx2}) {
    if (isa == Isa::avx2 && simd::avx2_kernels() == nullptr) continue;
    simd::select(isa);
    std::vector<double> c(m * n, 99.0);
    simd::gemm(Trans::yes, Trans::yes, m, n, k, at.data(), m, bt.data(), k, 0.0, c.data(), n);
    for (int i = 0; i < m * n; ++i) CHECK(c[i] == doctest::Approx(expected[i]).epsilon(1e-13));
  }
}

TEST_CASE("requesting an unavailable variant throws") {
  if (simd::avx2_kernels() != nullptr) {
    IsaGuard guard;
    simd::select(Isa::avx2);
    CHECK(simd::active_isa() == Isa::avx2);
  } else {
    CHECK_THROWS(simd::select(Isa::avx2));
  }
}
