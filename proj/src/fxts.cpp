#include "fxtsnet/fxts.hpp"

#include <cmath>
#include <stdexcept>

#include "fxtsnet/kernels.hpp"

namespace fxtsnet::fxts {

FxtsParams::FxtsParams(double a1, double a2, double mu_) : alpha1(a1), alpha2(a2), mu(mu_) {
    if (!(alpha1 > 0.0) || !(alpha2 > 0.0))
        throw std::invalid_argument("fxts: alpha1, alpha2 must be > 0");
    if (!(mu > 1.0)) throw std::invalid_argument("fxts: mu must be > 1");
    gamma1 = 1.0 + 1.0 / mu;
    gamma2 = 1.0 - 1.0 / mu;
}

void PerturbationConfig::validate() const {
    if (n_delta < 0) throw std::invalid_argument("fxts: n_delta must be >= 0");
    if (varsigma_max < 0.0) throw std::invalid_argument("fxts: varsigma_max must be >= 0");
    if (n_delta > 0 && dim < 1) throw std::invalid_argument("fxts: perturbation dim must be >= 1");
}

double pointwise_loss(const Tensor& h, const lyapunov::LyapunovAnchor& anchor,
                      const Tensor& f_val, const FxtsParams& p) {
    if (!h.same_shape(anchor.h_star) || !h.same_shape(f_val))
        throw std::invalid_argument("pointwise_loss: shape mismatch");
    const auto& ops = kernels::active();
    Tensor diff = Tensor::zeros(h.rows(), h.cols());
    ops.sub(h.data(), anchor.h_star.data(), diff.data(), h.size());
    const double vdot = ops.dot(diff.data(), f_val.data(), diff.size());
    const double V = 0.5 * ops.dot(diff.data(), diff.data(), diff.size());
    const double term =
        vdot + p.alpha1 * std::pow(V, p.gamma1) + p.alpha2 * std::pow(V, p.gamma2);
    return term > 0.0 ? term : 0.0;
}

ad::NodeId pointwise_loss_node(ad::Graph& g, ad::NodeId h, ad::NodeId h_star_const,
                               ad::NodeId f_val, const FxtsParams& p) {
    const ad::NodeId diff = g.sub(h, h_star_const);
    const ad::NodeId vdot = g.dot(diff, f_val);
    const ad::NodeId V = g.scale(g.dot(diff, diff), 0.5);
    const ad::NodeId powers = g.add(g.scale(g.pow_clamped(V, p.gamma1), p.alpha1),
                                    g.scale(g.pow_clamped(V, p.gamma2), p.alpha2));
    return g.relu_hinge(g.add(vdot, powers));
}

std::vector<Perturbation> draw_perturbations(const PerturbationConfig& cfg, Rng& rng) {
    cfg.validate();
    std::vector<Perturbation> out;
    out.reserve(static_cast<std::size_t>(cfg.n_delta));
    for (int j = 0; j < cfg.n_delta; ++j) {
        Tensor dir = Tensor::zeros(static_cast<std::size_t>(cfg.dim));
        double norm = 0.0;
        do {
            for (std::size_t i = 0; i < dir.size(); ++i) dir[i] = rng.normal();
            norm = std::sqrt(kernels::active().dot(dir.data(), dir.data(), dir.size()));
        } while (norm < 1e-12);
        for (std::size_t i = 0; i < dir.size(); ++i) dir[i] /= norm;
        out.push_back({std::move(dir), rng.uniform(0.0, cfg.varsigma_max)});
    }
    return out;
}

std::vector<Tensor> sample_perturbations(const Tensor& x_c, const PerturbationConfig& cfg,
                                         Rng& rng) {
    if (!x_c.all_finite()) throw std::invalid_argument("sample_perturbations: non-finite x_c");
    const auto& ops = kernels::active();
    const double norm = std::sqrt(ops.dot(x_c.data(), x_c.data(), x_c.size()));
    std::vector<Tensor> out;
    for (const auto& pert : draw_perturbations(cfg, rng)) {
        Tensor x = x_c;
        ops.axpy(pert.radius * norm, pert.unit_dir.data(), x.data(), x.size());
        out.push_back(std::move(x));
    }
    return out;
}

ad::NodeId perturbed_features_node(ad::Graph& g, ad::NodeId x_c, const Perturbation& pert) {
    // varsigma_j * u_j as a d x 1 matrix applied to the scalar ||x_c||, so
    // the disturbance scales with the feature norm inside the graph.
    const std::size_t d = pert.unit_dir.size();
    std::vector<double> col(d);
    for (std::size_t i = 0; i < d; ++i) col[i] = pert.radius * pert.unit_dir[i];
    const ad::NodeId dir = g.constant(Tensor::matrix(d, 1, std::move(col)));
    return g.add(x_c, g.matvec(dir, g.l2norm(x_c)));
}

KnotSum trajectory_knot_sum(ad::Graph& g, const model::ParamNodes& p, ad::NodeId x_c_used,
                            ad::NodeId h_star_const, const FxtsParams& fp,
                            const ode::SolverConfig& solver) {
    const auto knots = model::trajectory_knots(g, p, x_c_used, solver);
    KnotSum out;
    ad::NodeId acc = -1;
    for (int i = 1; i <= solver.knots; ++i) {
        const double t = ode::knot_time(i, solver.knots);
        const ad::NodeId h = knots[static_cast<std::size_t>(i)];
        const ad::NodeId f_val = model::dynamics(g, p, t, x_c_used, h);
        const ad::NodeId term = pointwise_loss_node(g, h, h_star_const, f_val, fp);
        if (g.scalar_value(term) > kViolationThreshold) ++out.violations;
        ++out.terms;
        acc = (acc < 0) ? term : g.add(acc, term);
    }
    out.node = g.scale(acc, 1.0 / solver.knots);
    return out;
}

FxtsStats fxts_stats(std::span<const Tensor> xs, std::span<const int> ys,
                     const model::ModelParams& params,
                     std::span<const lyapunov::LyapunovAnchor> anchors,
                     const PerturbationConfig& cfg, const FxtsParams& fp,
                     const ode::SolverConfig& solver, Rng& rng) {
    if (xs.size() != ys.size() || xs.size() != anchors.size())
        throw std::invalid_argument("fxts_loss: batch sizes disagree");
    if (xs.empty()) throw std::invalid_argument("fxts_loss: empty batch");
    FxtsStats stats;
    ad::Graph g;
    for (std::size_t s = 0; s < xs.size(); ++s) {
        g.reset();
        const model::ParamNodes p = bind(g, params, /*trainable=*/false);
        const ad::NodeId x_c = model::extract_features(g, p, g.constant(xs[s]));
        const ad::NodeId h_star = g.constant(anchors[s].h_star);
        double sample_loss = 0.0;
        if (cfg.n_delta == 0) {
            const KnotSum ks = trajectory_knot_sum(g, p, x_c, h_star, fp, solver);
            sample_loss = g.scalar_value(ks.node);
            stats.violations += ks.violations;
            stats.terms += ks.terms;
        } else {
            for (const auto& pert : draw_perturbations(cfg, rng)) {
                const ad::NodeId x_pert = perturbed_features_node(g, x_c, pert);
                const KnotSum ks = trajectory_knot_sum(g, p, x_pert, h_star, fp, solver);
                sample_loss += g.scalar_value(ks.node);
                stats.violations += ks.violations;
                stats.terms += ks.terms;
            }
        }
        stats.loss += sample_loss;
    }
    stats.loss /= static_cast<double>(xs.size());
    return stats;
}

double fxts_loss(std::span<const Tensor> xs, std::span<const int> ys,
                 const model::ModelParams& params,
                 std::span<const lyapunov::LyapunovAnchor> anchors, const PerturbationConfig& cfg,
                 const FxtsParams& fp, const ode::SolverConfig& solver, Rng& rng) {
    return fxts_stats(xs, ys, params, anchors, cfg, fp, solver, rng).loss;
}

}  // namespace fxtsnet::fxts
