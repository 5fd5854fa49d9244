// NEON variants (2 x f64). NEON is baseline on aarch64, so no extra compile
// flags and no runtime feature check are needed.

#include "fxtsnet/kernels.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

namespace fxtsnet::kernels {

namespace {

void v_axpy(double a, const double* x, double* y, std::size_t n) {
    const float64x2_t av = vdupq_n_f64(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2)
        vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), av, vld1q_f64(x + i)));
    for (; i < n; ++i) y[i] += a * x[i];
}

void v_scal(double a, const double* x, double* z, std::size_t n) {
    const float64x2_t av = vdupq_n_f64(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(z + i, vmulq_f64(av, vld1q_f64(x + i)));
    for (; i < n; ++i) z[i] = a * x[i];
}

void v_add(const double* x, const double* y, double* z, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(z + i, vaddq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
    for (; i < n; ++i) z[i] = x[i] + y[i];
}

void v_sub(const double* x, const double* y, double* z, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(z + i, vsubq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
    for (; i < n; ++i) z[i] = x[i] - y[i];
}

void v_mul(const double* x, const double* y, double* z, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(z + i, vmulq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
    for (; i < n; ++i) z[i] = x[i] * y[i];
}

double v_dot(const double* x, const double* y, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2)
        acc = vfmaq_f64(acc, vld1q_f64(x + i), vld1q_f64(y + i));
    double sum = vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1);
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
    const float64x2_t zero = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(z + i, vmaxq_f64(zero, vld1q_f64(x + i)));
    for (; i < n; ++i) z[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void v_tanh_bwd(const double* adj, const double* val, double* dst, std::size_t n) {
    const float64x2_t one = vdupq_n_f64(1.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t v = vld1q_f64(val + i);
        const float64x2_t g = vfmsq_f64(one, v, v);  // 1 - v*v
        vst1q_f64(dst + i, vfmaq_f64(vld1q_f64(dst + i), vld1q_f64(adj + i), g));
    }
    for (; i < n; ++i) dst[i] += adj[i] * (1.0 - val[i] * val[i]);
}

void v_relu_bwd(const double* adj, const double* pre, double* dst, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        if (pre[i] > 0.0) dst[i] += adj[i];
}

constexpr Ops kNeon = {v_axpy, v_scal, v_add,  v_sub,      v_mul,      v_dot, v_matvec,
                       v_matvec_t, v_ger, v_relu, v_tanh_bwd, v_relu_bwd, "neon"};

}  // namespace

const Ops* neon_ops() { return &kNeon; }

}  // namespace fxtsnet::kernels

#endif  // aarch64
