#include "fxtsnet/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace fxtsnet::kernels {

// ============================================================================
// Scalar reference kernels
// ============================================================================

namespace {

void s_axpy(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void s_scal(double a, const double* x, double* z, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) z[i] = a * x[i];
}

void s_add(const double* x, const double* y, double* z, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) z[i] = x[i] + y[i];
}

void s_sub(const double* x, const double* y, double* z, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) z[i] = x[i] - y[i];
}

void s_mul(const double* x, const double* y, double* z, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) z[i] = x[i] * y[i];
}

double s_dot(const double* x, const double* y, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

void s_matvec(const double* w, const double* x, double* y, std::size_t m, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* row = w + i * n;
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += row[j] * x[j];
        y[i] = acc;
    }
}

void s_matvec_t(const double* w, const double* x, double* y, std::size_t m, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* row = w + i * n;
        const double xi = x[i];
        for (std::size_t j = 0; j < n; ++j) y[j] += xi * row[j];
    }
}

void s_ger(double* w, const double* u, const double* v, std::size_t m, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double* row = w + i * n;
        const double ui = u[i];
        for (std::size_t j = 0; j < n; ++j) row[j] += ui * v[j];
    }
}

void s_relu(const double* x, double* z, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) z[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void s_tanh_bwd(const double* adj, const double* val, double* dst, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] += adj[i] * (1.0 - val[i] * val[i]);
}

void s_relu_bwd(const double* adj, const double* pre, double* dst, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        if (pre[i] > 0.0) dst[i] += adj[i];
}

constexpr Ops kScalar = {s_axpy, s_scal, s_add,  s_sub,      s_mul,      s_dot, s_matvec,
                         s_matvec_t, s_ger, s_relu, s_tanh_bwd, s_relu_bwd, "scalar"};

}  // namespace

const Ops& scalar_ops() { return kScalar; }

// ============================================================================
// Runtime selection
// ============================================================================

namespace {

const Ops& select() {
    const char* want = std::getenv("FXTSNET_KERNELS");
    if (want != nullptr) {
        if (std::strcmp(want, "scalar") == 0) return kScalar;
        if (std::strcmp(want, "avx2") == 0 && avx2_ops() != nullptr) return *avx2_ops();
        if (std::strcmp(want, "neon") == 0 && neon_ops() != nullptr) return *neon_ops();
        return kScalar;  // unknown or unavailable: fall back
    }
    if (const Ops* v = avx2_ops()) return *v;
    if (const Ops* v = neon_ops()) return *v;
    return kScalar;
}

}  // namespace

const Ops& active() {
    static const Ops& chosen = select();
    return chosen;
}

#if !(defined(__x86_64__) || defined(_M_X64))
const Ops* avx2_ops() { return nullptr; }
#endif

#if !defined(__aarch64__)
const Ops* neon_ops() { return nullptr; }
#endif

}  // namespace fxtsnet::kernels
