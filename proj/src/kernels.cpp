#include "ecl/kernels.hpp"

#include <cstdlib>
#include <cstring>
#include <string>

#include "ecl/errors.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define ECL_X86 1
#include <immintrin.h>
#else
#define ECL_X86 0
#endif

namespace ecl::kernels {

namespace scalar {

double dot(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

double sum(const double* a, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i];
    return s;
}

double sqnorm(const double* a, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * a[i];
    return s;
}

void axpy(double* y, double a, const double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void add(double* out, const double* a, const double* b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void sub(double* out, const double* a, const double* b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void mul(double* out, const double* a, const double* b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void scale(double* out, const double* a, double s, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * s;
}

void matmul_acc(double* c, const double* a, const double* b,
                std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = a[i * k + p];
            const double* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
        }
    }
}

}  // namespace scalar

#if ECL_X86

namespace avx2 {

// Four parallel accumulators; horizontal reduction at the end. Fixed order,
// but different from the scalar left-to-right chain.
__attribute__((target("avx2"))) double dot(const double* a, const double* b,
                                           std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d va = _mm256_loadu_pd(a + i);
        __m256d vb = _mm256_loadu_pd(b + i);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(va, vb));
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc);
    double s = ((lanes[0] + lanes[1]) + lanes[2]) + lanes[3];
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

__attribute__((target("avx2"))) double sum(const double* a, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(a + i));
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc);
    double s = ((lanes[0] + lanes[1]) + lanes[2]) + lanes[3];
    for (; i < n; ++i) s += a[i];
    return s;
}

__attribute__((target("avx2"))) double sqnorm(const double* a, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d va = _mm256_loadu_pd(a + i);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(va, va));
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc);
    double s = ((lanes[0] + lanes[1]) + lanes[2]) + lanes[3];
    for (; i < n; ++i) s += a[i] * a[i];
    return s;
}

// mul+add (no FMA) so each element matches the scalar rounding exactly.
__attribute__((target("avx2"))) void axpy(double* y, double a, const double* x,
                                          std::size_t n) {
    __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        __m256d vx = _mm256_loadu_pd(x + i);
        _mm256_storeu_pd(y + i, _mm256_add_pd(vy, _mm256_mul_pd(va, vx)));
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

__attribute__((target("avx2"))) void add(double* out, const double* a,
                                         const double* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i),
                                                _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] + b[i];
}

__attribute__((target("avx2"))) void sub(double* out, const double* a,
                                         const double* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(a + i),
                                                _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] - b[i];
}

__attribute__((target("avx2"))) void mul(double* out, const double* a,
                                         const double* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i),
                                                _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

__attribute__((target("avx2"))) void scale(double* out, const double* a,
                                           double s, std::size_t n) {
    __m256d vs = _mm256_set1_pd(s);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), vs));
    for (; i < n; ++i) out[i] = a[i] * s;
}

__attribute__((target("avx2"))) void matmul_acc(double* c, const double* a,
                                                const double* b, std::size_t m,
                                                std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = a[i * k + p];
            const double* brow = b + p * n;
            __m256d va = _mm256_set1_pd(aip);
            std::size_t j = 0;
            for (; j + 4 <= n; j += 4) {
                __m256d vc = _mm256_loadu_pd(crow + j);
                __m256d vb = _mm256_loadu_pd(brow + j);
                _mm256_storeu_pd(crow + j,
                                 _mm256_add_pd(vc, _mm256_mul_pd(va, vb)));
            }
            for (; j < n; ++j) crow[j] += aip * brow[j];
        }
    }
}

}  // namespace avx2

#endif  // ECL_X86

namespace {

struct Dispatch {
    Isa isa;
    double (*dot)(const double*, const double*, std::size_t);
    double (*sum)(const double*, std::size_t);
    double (*sqnorm)(const double*, std::size_t);
    void (*axpy)(double*, double, const double*, std::size_t);
    void (*add)(double*, const double*, const double*, std::size_t);
    void (*sub)(double*, const double*, const double*, std::size_t);
    void (*mul)(double*, const double*, const double*, std::size_t);
    void (*scale)(double*, const double*, double, std::size_t);
    void (*matmul_acc)(double*, const double*, const double*, std::size_t,
                       std::size_t, std::size_t);
};

constexpr Dispatch kScalar{Isa::scalar, scalar::dot,   scalar::sum,
                           scalar::sqnorm, scalar::axpy, scalar::add,
                           scalar::sub, scalar::mul,   scalar::scale,
                           scalar::matmul_acc};

#if ECL_X86
constexpr Dispatch kAvx2{Isa::avx2,   avx2::dot,   avx2::sum,
                         avx2::sqnorm, avx2::axpy, avx2::add,
                         avx2::sub,   avx2::mul,   avx2::scale,
                         avx2::matmul_acc};
#endif

Dispatch resolve() {
    const char* env = std::getenv("ECL_KERNELS");
    if (env != nullptr) {
        std::string want(env);
        if (want == "scalar") return kScalar;
#if ECL_X86
        if (want == "avx2") {
            if (!avx2_supported())
                throw ConfigError("ECL_KERNELS=avx2 but the CPU lacks AVX2");
            return kAvx2;
        }
#endif
        throw ConfigError("unknown ECL_KERNELS value: " + want);
    }
#if ECL_X86
    if (avx2_supported()) return kAvx2;
#endif
    return kScalar;
}

Dispatch g_dispatch = resolve();

}  // namespace

bool avx2_supported() {
#if ECL_X86
    return __builtin_cpu_supports("avx2") != 0;
#else
    return false;
#endif
}

Isa active() { return g_dispatch.isa; }

void force(Isa isa) {
    if (isa == Isa::scalar) {
        g_dispatch = kScalar;
        return;
    }
#if ECL_X86
    if (!avx2_supported()) throw ConfigError("CPU lacks AVX2");
    g_dispatch = kAvx2;
#else
    throw ConfigError("AVX2 kernels are not built on this architecture");
#endif
}

double dot(const double* a, const double* b, std::size_t n) {
    return g_dispatch.dot(a, b, n);
}
double sum(const double* a, std::size_t n) { return g_dispatch.sum(a, n); }
double sqnorm(const double* a, std::size_t n) {
    return g_dispatch.sqnorm(a, n);
}
void axpy(double* y, double a, const double* x, std::size_t n) {
    g_dispatch.axpy(y, a, x, n);
}
void add(double* out, const double* a, const double* b, std::size_t n) {
    g_dispatch.add(out, a, b, n);
}
void sub(double* out, const double* a, const double* b, std::size_t n) {
    g_dispatch.sub(out, a, b, n);
}
void mul(double* out, const double* a, const double* b, std::size_t n) {
    g_dispatch.mul(out, a, b, n);
}
void scale(double* out, const double* a, double s, std::size_t n) {
    g_dispatch.scale(out, a, s, n);
}
void matmul_acc(double* c, const double* a, const double* b, std::size_t m,
                std::size_t k, std::size_t n) {
    g_dispatch.matmul_acc(c, a, b, m, k, n);
}

}  // namespace ecl::kernels
