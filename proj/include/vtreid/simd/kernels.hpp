#pragma once

#include <cstddef>
#include <string_view>

// Dense inner loops used by the tensor engine. Each kernel has a scalar
// reference implementation and, where the CPU allows, an AVX2+FMA variant.
// The variant is picked once at startup (CPU detection, overridable through
// VTREID_SIMD=scalar|avx2) and can be forced by tests.
//
// All matrices are row-major with explicit leading dimensions.

namespace vtreid::simd {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);

struct KernelTable {
  Isa isa;
  // C[m x n] = beta * C + A[m x k] * B[k x n]
  void (*gemm)(int m, int n, int k, const double* a, int lda, const double* b, int ldb,
               double beta, double* c, int ldc);
  double (*dot)(const double* x, const double* y, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  double (*sum)(const double* x, std::size_t n);
};

const KernelTable& scalar_kernels();
// nullptr when the build or the running CPU lacks AVX2/FMA.
const KernelTable* avx2_kernels();

bool cpu_has_avx2();

const KernelTable& active();
Isa active_isa();
// Throws ContractError if the requested variant is unavailable.
void select(Isa isa);

enum class Trans { no, yes };

// C = beta * C + op(A) * op(B), op(A) is m x k, op(B) is k x n. Transposed
// operands are packed into contiguous scratch before the active gemm runs.
void gemm(Trans ta, Trans tb, int m, int n, int k, const double* a, int lda, const double* b,
          int ldb, double beta, double* c, int ldc);

}  // namespace vtreid::simd
