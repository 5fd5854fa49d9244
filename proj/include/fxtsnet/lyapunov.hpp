#pragma once

#include <functional>

#include "fxtsnet/autodiff.hpp"
#include "fxtsnet/model.hpp"
#include "fxtsnet/tensor.hpp"

// Lyapunov function V_y(h) = 1/2 ||h - h*||^2 anchored at the optimal state
// h*, which is located by normalized gradient steps of the classification
// loss starting from the trajectory endpoint. h* is a constant thereafter:
// no gradient flows into it from the FxTS loss.

namespace fxtsnet::lyapunov {

struct LyapunovAnchor {
    Tensor h_star;
    int label = 0;
    Tensor source_traj_end;  // h(t_Gamma) used as initialization
};

double lyapunov_value(const Tensor& h, const LyapunovAnchor& anchor);
Tensor lyapunov_grad(const Tensor& h, const LyapunovAnchor& anchor);  // h - h*

// V as a graph node: 1/2 dot(h - h*, h - h*).
ad::NodeId lyapunov_node(ad::Graph& g, ad::NodeId h, ad::NodeId h_star_const);

struct InnerConfig {
    double eta2 = 2.0;  // inner learning rate
    int iters = 3;      // N2
    double box = 1e3;   // projection box [-box, box]^d_h
};

// loss_fn(h) -> (loss, grad); grad has h's shape.
using LossFn = std::function<std::pair<double, Tensor>(const Tensor&)>;

// Core iteration: h* <- h* - (eta2*||h(tG)||2 / (N2*||grad||2)) * grad,
// skipping the update when ||grad||2 < 1e-12. Returns the best-loss iterate
// among the initializer and all steps (the inner loop is guarded monotone).
Tensor optimal_state_impl(const Tensor& traj_end, const LossFn& loss_fn, const InnerConfig& cfg);

// Anchor for a classification sample: loss is softmax cross-entropy of
// psi(h*) against the label.
LyapunovAnchor optimal_state(const Tensor& traj_end, int label, const model::ModelParams& params,
                             const InnerConfig& cfg);

}  // namespace fxtsnet::lyapunov
