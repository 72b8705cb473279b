#include <atomic>
#include <cstdlib>
#include <string>
#include <vector>

#include "vtreid/core/error.hpp"
#include "vtreid/simd/kernels.hpp"

namespace vtreid::simd {

#if defined(VTREID_HAVE_AVX2)
const KernelTable& avx2_kernel_table();
#endif

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

bool cpu_has_avx2() {
#if defined(VTREID_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* avx2_kernels() {
#if defined(VTREID_HAVE_AVX2)
  if (cpu_has_avx2()) return &avx2_kernel_table();
#endif
  return nullptr;
}

namespace {

const KernelTable* initial_table() {
  const char* env = std::getenv("VTREID_SIMD");
  if (env != nullptr && std::string(env) == "scalar") return &scalar_kernels();
  if (const KernelTable* t = avx2_kernels()) return t;
  return &scalar_kernels();
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{initial_table()};
  return table;
}

}  // namespace

const KernelTable& active() { return *current().load(std::memory_order_relaxed); }

Isa active_isa() { return active().isa; }

void select(Isa isa) {
  if (isa == Isa::scalar) {
    current().store(&scalar_kernels());
    return;
  }
  const KernelTable* t = avx2_kernels();
  if (t == nullptr) throw ContractError("AVX2 kernels unavailable on this CPU/build");
  current().store(t);
}

void gemm(Trans ta, Trans tb, int m, int n, int k, const double* a, int lda, const double* b,
          int ldb, double beta, double* c, int ldc) {
  if (m <= 0 || n <= 0) return;
  if (k <= 0) {
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) c[static_cast<std::ptrdiff_t>(i) * ldc + j] *= beta;
    return;
  }
  thread_local std::vector<double> pack_a;
  thread_local std::vector<double> pack_b;
  const double* pa = a;
  int plda = lda;
  if (ta == Trans::yes) {
    // a is stored k x m
    pack_a.resize(static_cast<std::size_t>(m) * k);
    for (int p = 0; p < k; ++p)
      for (int i = 0; i < m; ++i)
        pack_a[static_cast<std::size_t>(i) * k + p] = a[static_cast<std::ptrdiff_t>(p) * lda + i];
    pa = pack_a.data();
    plda = k;
  }
  const double* pb = b;
  int pldb = ldb;
  if (tb == Trans::yes) {
    // b is stored n x k
    pack_b.resize(static_cast<std::size_t>(k) * n);
    for (int j = 0; j < n; ++j)
      for (int p = 0; p < k; ++p)
        pack_b[static_cast<std::size_t>(p) * n + j] = b[static_cast<std::ptrdiff_t>(j) * ldb + p];
    pb = pack_b.data();
    pldb = n;
  }
  active().gemm(m, n, k, pa, plda, pb, pldb, beta, c, ldc);
}

}  // namespace vtreid::simd
