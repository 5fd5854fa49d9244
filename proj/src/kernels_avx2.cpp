// AVX2/FMA variants of the f64 kernels. This translation unit is compiled
// with -mavx2 -mfma; active() only hands these out after a cpuid check.

#include "fxtsnet/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

namespace fxtsnet::kernels {

namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d swapped = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

void v_axpy(double a, const double* x, double* y, std::size_t n) {
    const __m256d av = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d yv = _mm256_loadu_pd(y + i);
        yv = _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), yv);
        _mm256_storeu_pd(y + i, yv);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void v_scal(double a, const double* x, double* z, std::size_t n) {
    const __m256d av = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(z + i, _mm256_mul_pd(av, _mm256_loadu_pd(x + i)));
    for (; i < n; ++i) z[i] = a * x[i];
}

void v_add(const double* x, const double* y, double* z, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(z + i, _mm256_add_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    for (; i < n; ++i) z[i] = x[i] + y[i];
}

void v_sub(const double* x, const double* y, double* z, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(z + i, _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    for (; i < n; ++i) z[i] = x[i] - y[i];
}

void v_mul(const double* x, const double* y, double* z, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(z + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    for (; i < n; ++i) z[i] = x[i] * y[i];
}

double v_dot(const double* x, const double* y, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
    double sum = hsum(acc);
    for (; i < n; ++i) sum += x[i] * y[i];
    return sum;
}

void v_matvec(const double* w, const double* x, double* y, std::size_t m, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) y[i] = v_dot(w + i * n, x, n);
}

void v_matvec_t(const double* w, const double* x, double* y, std::size_t m, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) v_axpy(x[i], w + i * n, y, n);
}

void v_ger(double* w, const double* u, const double* v, std::size_t m, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) v_axpy(u[i], v, w + i * n, n);
}

void v_relu(const double* x, double* z, std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(z + i, _mm256_max_pd(zero, _mm256_loadu_pd(x + i)));
    for (; i < n; ++i) z[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void v_tanh_bwd(const double* adj, const double* val, double* dst, std::size_t n) {
    const __m256d one = _mm256_set1_pd(1.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_loadu_pd(val + i);
        const __m256d g = _mm256_fnmadd_pd(v, v, one);  // 1 - v*v
        __m256d d = _mm256_loadu_pd(dst + i);
        d = _mm256_fmadd_pd(_mm256_loadu_pd(adj + i), g, d);
        _mm256_storeu_pd(dst + i, d);
    }
    for (; i < n; ++i) dst[i] += adj[i] * (1.0 - val[i] * val[i]);
}

void v_relu_bwd(const double* adj, const double* pre, double* dst, std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(pre + i), zero, _CMP_GT_OQ);
        const __m256d gated = _mm256_and_pd(mask, _mm256_loadu_pd(adj + i));
        _mm256_storeu_pd(dst + i, _mm256_add_pd(_mm256_loadu_pd(dst + i), gated));
    }
    for (; i < n; ++i)
        if (pre[i] > 0.0) dst[i] += adj[i];
}

constexpr Ops kAvx2 = {v_axpy, v_scal, v_add,  v_sub,      v_mul,      v_dot, v_matvec,
                       v_matvec_t, v_ger, v_relu, v_tanh_bwd, v_relu_bwd, "avx2"};

}  // namespace

const Ops* avx2_ops() {
    static const Ops* ops = [] {
        __builtin_cpu_init();
        const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
        return ok ? &kAvx2 : nullptr;
    }();
    return ops;
}

}  // namespace fxtsnet::kernels

#endif  // x86-64
