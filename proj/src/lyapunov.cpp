#include "fxtsnet/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fxtsnet/kernels.hpp"

namespace fxtsnet::lyapunov {

double lyapunov_value(const Tensor& h, const LyapunovAnchor& anchor) {
    if (!h.same_shape(anchor.h_star))
        throw std::invalid_argument("lyapunov_value: shape mismatch");
    const auto& ops = kernels::active();
    Tensor diff = Tensor::zeros(h.rows(), h.cols());
    ops.sub(h.data(), anchor.h_star.data(), diff.data(), h.size());
    return 0.5 * ops.dot(diff.data(), diff.data(), diff.size());
}

Tensor lyapunov_grad(const Tensor& h, const LyapunovAnchor& anchor) {
    if (!h.same_shape(anchor.h_star))
        throw std::invalid_argument("lyapunov_grad: shape mismatch");
    Tensor diff = Tensor::zeros(h.rows(), h.cols());
    kernels::active().sub(h.data(), anchor.h_star.data(), diff.data(), h.size());
    return diff;
}

ad::NodeId lyapunov_node(ad::Graph& g, ad::NodeId h, ad::NodeId h_star_const) {
    const ad::NodeId diff = g.sub(h, h_star_const);
    return g.scale(g.dot(diff, diff), 0.5);
}

Tensor optimal_state_impl(const Tensor& traj_end, const LossFn& loss_fn, const InnerConfig& cfg) {
    if (cfg.eta2 <= 0.0) throw std::invalid_argument("optimal_state: eta2 must be > 0");
    if (cfg.iters < 1) throw std::invalid_argument("optimal_state: N2 must be >= 1");
    const auto& ops = kernels::active();
    const std::size_t d = traj_end.size();
    const double end_norm = std::sqrt(ops.dot(traj_end.data(), traj_end.data(), d));
    const double step = cfg.eta2 * end_norm / static_cast<double>(cfg.iters);

    // gradient projection onto H: the initializer is projected too
    Tensor h = traj_end;
    for (std::size_t i = 0; i < d; ++i) h[i] = std::clamp(h[i], -cfg.box, cfg.box);
    Tensor best = h;
    double best_loss = loss_fn(h).first;
    for (int it = 0; it < cfg.iters; ++it) {
        auto [loss, grad] = loss_fn(h);
        (void)loss;
        const double gnorm = std::sqrt(ops.dot(grad.data(), grad.data(), d));
        if (gnorm < 1e-12) break;  // at a stationary point the correct step is null
        ops.axpy(-step / gnorm, grad.data(), h.data(), d);
        for (std::size_t i = 0; i < d; ++i) h[i] = std::clamp(h[i], -cfg.box, cfg.box);
        const double new_loss = loss_fn(h).first;
        if (new_loss < best_loss) {
            best_loss = new_loss;
            best = h;
        }
    }
    return best;
}

LyapunovAnchor optimal_state(const Tensor& traj_end, int label, const model::ModelParams& params,
                             const InnerConfig& cfg) {
    ad::Graph g;
    const model::ParamNodes p = bind(g, params, /*trainable=*/false);
    const ad::NodeId h_in = g.input("h", traj_end);
    const ad::NodeId loss = g.softmax_cross_entropy(model::predict(g, p, h_in), label);

    LossFn fn = [&](const Tensor& h) {
        g.set_input("h", h);
        g.recompute();
        return std::make_pair(g.scalar_value(loss), g.gradient_one(loss, "h"));
    };

    LyapunovAnchor anchor;
    anchor.h_star = optimal_state_impl(traj_end, fn, cfg);
    anchor.label = label;
    anchor.source_traj_end = traj_end;
    return anchor;
}

}  // namespace fxtsnet::lyapunov
