#pragma once

#include <cstdint>
#include <string>

#include "fxtsnet/autodiff.hpp"
#include "fxtsnet/ode.hpp"
#include "fxtsnet/tensor.hpp"

// Data-controlled Neural ODE: input map phi (one hidden tanh layer), vector
// field f over concat(h, x_c, t) (two hidden tanh layers, affine out), and
// affine output map psi. Time enters f as a raw scalar appended to the
// concatenation. h(0) is the zero vector.

namespace fxtsnet::model {

struct Dims {
    int d_x = 2;
    int d_c = 16;
    int d_h = 16;
    int hidden = 32;
    int classes = 2;

    void validate() const;
    int f_in() const { return d_h + d_c + 1; }
};

struct ModelParams {
    Dims dims;
    std::uint64_t seed = 0;

    Tensor phi_w1, phi_b1, phi_w2, phi_b2;
    Tensor f_w1, f_b1, f_w2, f_b2, f_w3, f_b3;
    Tensor psi_w, psi_b;

    // Seeded uniform(-a, a) init with a = 1/sqrt(fan_in), biases included;
    // tensors are filled in the fixed for_each order.
    static ModelParams init(const Dims& dims, std::uint64_t seed);

    template <class F>
    void for_each(F&& fn) {
        fn("phi.w1", phi_w1); fn("phi.b1", phi_b1);
        fn("phi.w2", phi_w2); fn("phi.b2", phi_b2);
        fn("f.w1", f_w1); fn("f.b1", f_b1);
        fn("f.w2", f_w2); fn("f.b2", f_b2);
        fn("f.w3", f_w3); fn("f.b3", f_b3);
        fn("psi.w", psi_w); fn("psi.b", psi_b);
    }
    template <class F>
    void for_each(F&& fn) const {
        fn("phi.w1", phi_w1); fn("phi.b1", phi_b1);
        fn("phi.w2", phi_w2); fn("phi.b2", phi_b2);
        fn("f.w1", f_w1); fn("f.b1", f_b1);
        fn("f.w2", f_w2); fn("f.b2", f_b2);
        fn("f.w3", f_w3); fn("f.b3", f_b3);
        fn("psi.w", psi_w); fn("psi.b", psi_b);
    }
};

// Fixed-order access to the 12 parameter tensors (for_each order).
std::vector<Tensor*> param_tensors(ModelParams& p);
std::vector<const Tensor*> param_tensors(const ModelParams& p);
const std::vector<std::string>& param_names();

// Parameter tensors bound into a graph. When trainable is false the tensors
// enter as constants and the backward pass ignores them.
struct ParamNodes {
    ad::NodeId phi_w1, phi_b1, phi_w2, phi_b2;
    ad::NodeId f_w1, f_b1, f_w2, f_b2, f_w3, f_b3;
    ad::NodeId psi_w, psi_b;
};

ParamNodes bind(ad::Graph& g, const ModelParams& params, bool trainable);

ad::NodeId extract_features(ad::Graph& g, const ParamNodes& p, ad::NodeId x);
ad::NodeId dynamics(ad::Graph& g, const ParamNodes& p, double t, ad::NodeId x_c, ad::NodeId h);
ad::NodeId predict(ad::Graph& g, const ParamNodes& p, ad::NodeId h);

// Trajectory of h through the graph; returns the knot node ids.
std::vector<ad::NodeId> trajectory_knots(ad::Graph& g, const ParamNodes& p, ad::NodeId x_c,
                                         const ode::SolverConfig& cfg);

struct ForwardResult {
    ode::Trajectory traj;
    Tensor logits;  // psi(h(t_Gamma))
};

ForwardResult forward(const Tensor& x, const ModelParams& params, const ode::SolverConfig& cfg);

// argmax with lowest-index tie break
int argmax(const Tensor& logits);

// ---- Lipschitz estimates -----------------------------------------------------

struct LipschitzBounds {
    double L_phi = 0.0;
    double L_f = 0.0;
    double L_psi = 0.0;
    double L_V = 0.0;  // diameter bound of visited states, filled at evaluation time
};

// Spectral norm by power iteration; an upper bound factor for one layer.
double spectral_norm(const Tensor& w, int iters = 300);

// Product of layer spectral norms (tanh has Lipschitz constant 1).
double lipschitz_phi(const ModelParams& p);
double lipschitz_f(const ModelParams& p);
double lipschitz_psi(const ModelParams& p);

// ---- checkpoint JSON -----------------------------------------------------------

void save_checkpoint(const std::string& path, const ModelParams& params);
ModelParams load_checkpoint(const std::string& path);

}  // namespace fxtsnet::model
