#include "fxtsnet/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fxtsnet::attacks {

void AttackConfig::validate() const {
    if (epsilon < 0.0) throw std::invalid_argument("attack: epsilon must be >= 0");
    if (steps < 1) throw std::invalid_argument("attack: steps must be >= 1");
    if (step_size < 0.0) throw std::invalid_argument("attack: step_size must be >= 0");
}

namespace {

struct LossGraph {
    ad::Graph g;
    ad::NodeId loss;

    LossGraph(const model::ModelParams& params, const ode::SolverConfig& solver, const Tensor& x,
              int label) {
        const model::ParamNodes p = bind(g, params, /*trainable=*/false);
        const ad::NodeId xn = g.input("x", x);
        const ad::NodeId x_c = model::extract_features(g, p, xn);
        const auto knots = model::trajectory_knots(g, p, x_c, solver);
        loss = g.softmax_cross_entropy(model::predict(g, p, knots.back()), label);
    }

    double value() { return g.scalar_value(loss); }
    Tensor grad_x() { return g.gradient_one(loss, "x"); }
    void rebind(const Tensor& x) {
        g.set_input("x", x);
        g.recompute();
    }
};

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

void clip_domain(Tensor& x, const Domain& d) {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], d.lo, d.hi);
}

void clip_ball(Tensor& x, const Tensor& center, double eps) {
    for (std::size_t i = 0; i < x.size(); ++i)
        x[i] = std::clamp(x[i], center[i] - eps, center[i] + eps);
}

}  // namespace

double cls_loss(const model::ModelParams& params, const ode::SolverConfig& solver, const Tensor& x,
                int label) {
    LossGraph lg(params, solver, x, label);
    return lg.value();
}

Tensor cls_loss_grad_x(const model::ModelParams& params, const ode::SolverConfig& solver,
                       const Tensor& x, int label) {
    LossGraph lg(params, solver, x, label);
    return lg.grad_x();
}

Tensor fgsm(const model::ModelParams& params, const ode::SolverConfig& solver, const Tensor& x,
            int label, double epsilon, const Domain& domain) {
    if (epsilon < 0.0) throw std::invalid_argument("fgsm: epsilon must be >= 0");
    const Tensor g = cls_loss_grad_x(params, solver, x, label);
    Tensor out = x;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += epsilon * sign(g[i]);
    clip_ball(out, x, epsilon);
    clip_domain(out, domain);
    return out;
}

Tensor pgd(const model::ModelParams& params, const ode::SolverConfig& solver, const Tensor& x,
           int label, const AttackConfig& cfg, const Domain& domain, Rng& rng,
           const std::function<void(const Tensor&)>& on_iter) {
    cfg.validate();
    const double step = cfg.step_size > 0.0 ? cfg.step_size : cfg.epsilon / 4.0;
    Tensor cur = x;
    if (cfg.random_start) {
        for (std::size_t i = 0; i < cur.size(); ++i)
            cur[i] += rng.uniform(-cfg.epsilon, cfg.epsilon);
        clip_domain(cur, domain);
    }
    LossGraph lg(params, solver, cur, label);
    for (int it = 0; it < cfg.steps; ++it) {
        if (it > 0) lg.rebind(cur);
        const Tensor g = lg.grad_x();
        for (std::size_t i = 0; i < cur.size(); ++i) cur[i] += step * sign(g[i]);
        clip_ball(cur, x, cfg.epsilon);
        clip_domain(cur, domain);
        if (on_iter) on_iter(cur);
    }
    return cur;
}

Tensor corrupt_gaussian(const Tensor& x, double sigma, Rng& rng) {
    if (sigma < 0.0) throw std::invalid_argument("corrupt: sigma must be >= 0");
    Tensor out = x;
    if (sigma > 0.0)
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += sigma * rng.normal();
    return out;
}

Tensor corrupt_impulse(const Tensor& x, double p, const Domain& domain, Rng& rng) {
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("corrupt: p must be in [0, 1]");
    Tensor out = x;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double u = rng.uniform01();
        if (u < p / 2.0)
            out[i] = domain.lo;
        else if (u < p)
            out[i] = domain.hi;
    }
    return out;
}

}  // namespace fxtsnet::attacks
