#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "fxtsnet/autodiff.hpp"
#include "fxtsnet/rng.hpp"
#include "fxtsnet/tensor.hpp"

// Shared test helpers: central finite differences against the autodiff
// gradients, and tolerance plumbing.

namespace testsupport {

using fxtsnet::Tensor;

inline double rel_err(double a, double b) {
    const double denom = std::max({std::abs(a), std::abs(b), 1e-12});
    return std::abs(a - b) / denom;
}

// Relative error between vectors: ||a - b|| / max(||a||, ||b||, 1e-12).
inline double vec_rel_err(const Tensor& a, const Tensor& b) {
    double num = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - b[i]) * (a[i] - b[i]);
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return std::sqrt(num) / std::max({std::sqrt(na), std::sqrt(nb), 1e-12});
}

// Central finite differences of f w.r.t. one tensor; step 1e-5.
inline Tensor finite_diff(const std::function<double(const Tensor&)>& f, const Tensor& x,
                          double step = 1e-5) {
    Tensor grad = Tensor::zeros(x.rows(), x.cols());
    Tensor probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        probe[i] = x[i] + step;
        const double hi = f(probe);
        probe[i] = x[i] - step;
        const double lo = f(probe);
        probe[i] = x[i];
        grad[i] = (hi - lo) / (2.0 * step);
    }
    return grad;
}

inline Tensor random_tensor(std::size_t rows, std::size_t cols, fxtsnet::Rng& rng, double lo = -2.0,
                            double hi = 2.0) {
    Tensor t = Tensor::zeros(rows, cols);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

}  // namespace testsupport
