#pragma once

#include <cstddef>

// Dense f64 kernels behind the autodiff engine. Scalar reference
// implementations plus SIMD variants (AVX2 on x86-64, NEON on aarch64)
// selected once at startup; FXTSNET_KERNELS=scalar|avx2|neon overrides.
//
// Summation order is fixed within a backend, so repeated evaluation in one
// process is bit-identical. tanh is scalar libm in every backend.

namespace fxtsnet::kernels {

struct Ops {
    // y += a*x
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
    // z = a*x
    void (*scal)(double a, const double* x, double* z, std::size_t n);
    void (*add)(const double* x, const double* y, double* z, std::size_t n);
    void (*sub)(const double* x, const double* y, double* z, std::size_t n);
    void (*mul)(const double* x, const double* y, double* z, std::size_t n);
    double (*dot)(const double* x, const double* y, std::size_t n);
    // y = W x                     (W is m x n, row-major)
    void (*matvec)(const double* w, const double* x, double* y, std::size_t m, std::size_t n);
    // y += W^T x                  (accumulating; backward pass)
    void (*matvec_t)(const double* w, const double* x, double* y, std::size_t m, std::size_t n);
    // W += u v^T                  (accumulating rank-1; backward pass)
    void (*ger)(double* w, const double* u, const double* v, std::size_t m, std::size_t n);
    // z = max(0, x)
    void (*relu)(const double* x, double* z, std::size_t n);
    // dst += adj * (1 - val^2)    (tanh backward; val = tanh(pre))
    void (*tanh_bwd)(const double* adj, const double* val, double* dst, std::size_t n);
    // dst += adj * (pre > 0)
    void (*relu_bwd)(const double* adj, const double* pre, double* dst, std::size_t n);
    const char* name;
};

const Ops& scalar_ops();

// Backend compiled in and usable on this CPU, else nullptr.
const Ops* avx2_ops();
const Ops* neon_ops();

// Selected backend (resolved once; honours FXTSNET_KERNELS).
const Ops& active();

}  // namespace fxtsnet::kernels
