#pragma once

#include <cstddef>

// Low-level double-precision kernels behind the tensor primitives.
//
// Every kernel has a scalar reference implementation and, on x86-64, an AVX2
// variant selected once at startup (ECL_KERNELS=scalar|avx2 overrides the
// cpuid probe). Elementwise kernels and matmul use mul+add in the same
// element order as the scalar reference, so both lanes produce bit-identical
// results. Reductions (dot, sum, sqnorm) accumulate lane-blocked under AVX2
// and agree with the scalar left-to-right order only up to rounding; the
// equivalence tests pin that gap. Within one lane all summation orders are
// fixed, which is what the bit-reproducibility contract of the engine needs.

namespace ecl::kernels {

enum class Isa { scalar, avx2 };

// Lane active for this process (resolved on first use).
Isa active();

// Force a lane; throws ConfigError if the hardware cannot run it.
void force(Isa isa);

bool avx2_supported();

double dot(const double* a, const double* b, std::size_t n);
double sum(const double* a, std::size_t n);
double sqnorm(const double* a, std::size_t n);

// y[i] += a * x[i]
void axpy(double* y, double a, const double* x, std::size_t n);
void add(double* out, const double* a, const double* b, std::size_t n);
void sub(double* out, const double* a, const double* b, std::size_t n);
void mul(double* out, const double* a, const double* b, std::size_t n);
void scale(double* out, const double* a, double s, std::size_t n);

// C += A (m x k, row-major) * B (k x n, row-major); caller zeroes C first
// when plain product semantics are wanted. i-k-j loop order in both lanes.
void matmul_acc(double* c, const double* a, const double* b,
                std::size_t m, std::size_t k, std::size_t n);

}  // namespace ecl::kernels
