#include "fxtsnet/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "fxtsnet/kernels.hpp"
#include "fxtsnet/rng.hpp"

namespace fxtsnet::train {

void TrainConfig::validate() const {
    dims.validate();
    solver.validate();
    perturb.validate();
    if (!(lr > 0.0) || !(inner_lr > 0.0)) throw std::invalid_argument("train: lrs must be > 0");
    if (epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");
    if (inner_iters < 1) throw std::invalid_argument("train: inner_iters must be >= 1");
    if (lambda < 0.0) throw std::invalid_argument("train: lambda must be >= 0");
    if (!(anchor_box > 0.0)) throw std::invalid_argument("train: anchor_box must be > 0");
    if (batch < 1) throw std::invalid_argument("train: batch must be >= 1");
}

void optimizer_step(model::ModelParams& params, const std::vector<Tensor>& grads, double lr) {
    const auto& ops = kernels::active();
    auto tensors = model::param_tensors(params);
    if (grads.size() != tensors.size())
        throw std::invalid_argument("optimizer_step: gradient count mismatch");
    for (std::size_t i = 0; i < tensors.size(); ++i) {
        Tensor& t = *tensors[i];
        const Tensor& g = grads[i];
        if (!t.same_shape(g)) throw std::invalid_argument("optimizer_step: shape mismatch");
        const double tn = std::sqrt(ops.dot(t.data(), t.data(), t.size()));
        const double gn = std::sqrt(ops.dot(g.data(), g.data(), g.size()));
        ops.axpy(-lr * tn / (gn + 1e-12), g.data(), t.data(), t.size());
    }
}

double error_rate(const model::ModelParams& params, const data::Dataset& ds,
                  const ode::SolverConfig& solver) {
    if (ds.size() == 0) return 0.0;
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto fwd = model::forward(ds.sample(i), params, solver);
        if (model::argmax(fwd.logits) != ds.y[i]) ++wrong;
    }
    return double(wrong) / double(ds.size());
}

namespace {

struct BatchAccum {
    std::vector<Tensor> grads;

    explicit BatchAccum(const model::ModelParams& params) {
        for (const Tensor* t : model::param_tensors(params))
            grads.push_back(Tensor::zeros(t->rows(), t->cols()));
    }
    void zero() {
        for (Tensor& g : grads)
            for (std::size_t i = 0; i < g.size(); ++i) g[i] = 0.0;
    }
};

// One sample's graph: forward trajectory + cls loss, and in fxts mode the
// anchor and the perturbed-trajectory knot sums. The fxts nodes are built
// after the cls node, so with lambda == 0 the backward pass over the cls
// root is bit-identical to the baseline graph's.
struct SampleOutcome {
    double cls = 0.0;
    double fxts = 0.0;
    int violations = 0;
    int terms = 0;
};

SampleOutcome run_sample(ad::Graph& g, const TrainConfig& cfg, const model::ModelParams& params,
                         const Tensor& x, int label, bool fxts_mode, Rng& perturb_rng,
                         BatchAccum& acc) {
    g.reset();
    const model::ParamNodes p = bind(g, params, /*trainable=*/true);
    const ad::NodeId x_c = model::extract_features(g, p, g.constant(x));
    const auto knots = model::trajectory_knots(g, p, x_c, cfg.solver);
    const ad::NodeId cls = g.softmax_cross_entropy(model::predict(g, p, knots.back()), label);

    SampleOutcome out;
    out.cls = g.scalar_value(cls);
    ad::NodeId root = cls;

    if (fxts_mode) {
        const lyapunov::InnerConfig inner{cfg.inner_lr, cfg.inner_iters, cfg.anchor_box};
        const lyapunov::LyapunovAnchor anchor =
            lyapunov::optimal_state(g.value(knots.back()), label, params, inner);
        const ad::NodeId h_star = g.constant(anchor.h_star);

        ad::NodeId fxts_total = -1;
        if (cfg.perturb.n_delta == 0) {
            // knot sum on the unperturbed trajectory; no RNG draws
            ad::NodeId acc_node = -1;
            for (int i = 1; i <= cfg.solver.knots; ++i) {
                const double t = ode::knot_time(i, cfg.solver.knots);
                const ad::NodeId h = knots[static_cast<std::size_t>(i)];
                const ad::NodeId f_val = model::dynamics(g, p, t, x_c, h);
                const ad::NodeId term =
                    fxts::pointwise_loss_node(g, h, h_star, f_val, cfg.fxts_params);
                if (g.scalar_value(term) > fxts::kViolationThreshold) ++out.violations;
                ++out.terms;
                acc_node = acc_node < 0 ? term : g.add(acc_node, term);
            }
            fxts_total = g.scale(acc_node, 1.0 / cfg.solver.knots);
        } else {
            for (const auto& pert : fxts::draw_perturbations(cfg.perturb, perturb_rng)) {
                const ad::NodeId x_pert = fxts::perturbed_features_node(g, x_c, pert);
                const fxts::KnotSum ks =
                    fxts::trajectory_knot_sum(g, p, x_pert, h_star, cfg.fxts_params, cfg.solver);
                out.violations += ks.violations;
                out.terms += ks.terms;
                fxts_total = fxts_total < 0 ? ks.node : g.add(fxts_total, ks.node);
            }
        }
        out.fxts = g.scalar_value(fxts_total);
        if (cfg.lambda > 0.0) root = g.add(cls, g.scale(fxts_total, cfg.lambda));
    }

    g.backward(root);
    const ad::NodeId ids[12] = {p.phi_w1, p.phi_b1, p.phi_w2, p.phi_b2, p.f_w1, p.f_b1,
                                p.f_w2,   p.f_b2,   p.f_w3,   p.f_b3,   p.psi_w, p.psi_b};
    const auto& ops = kernels::active();
    for (std::size_t i = 0; i < 12; ++i) {
        const auto adj = g.adjoint_view(ids[i]);
        ops.axpy(1.0, adj.data(), acc.grads[i].data(), adj.size());
    }
    return out;
}

// Nero-style radius constraint: layer norms are projected back to their
// initialization values after every update. The normalized-gradient rule
// alone lets ||theta|| drift upward, which inflates ||h(t_Gamma)|| and with
// it the anchor distance eta2*||h(t_Gamma)||, so the FxTS term diverges.
void project_norms(model::ModelParams& params, const std::vector<double>& radii) {
    const auto& ops = kernels::active();
    auto tensors = model::param_tensors(params);
    for (std::size_t i = 0; i < tensors.size(); ++i) {
        Tensor& t = *tensors[i];
        const double norm = std::sqrt(ops.dot(t.data(), t.data(), t.size()));
        if (norm < 1e-300) continue;
        const double c = radii[i] / norm;
        for (std::size_t j = 0; j < t.size(); ++j) t[j] *= c;
    }
}

TrainResult run_training(const TrainConfig& cfg, const data::Dataset& train_set,
                         const data::Dataset& test_set, bool fxts_mode) {
    cfg.validate();
    if (train_set.size() == 0) throw std::invalid_argument("train: empty dataset");
    TrainConfig local = cfg;
    local.perturb.dim = cfg.dims.d_c;

    TrainResult result;
    result.params = model::ModelParams::init(cfg.dims, cfg.seed);
    std::vector<double> radii;
    for (const Tensor* t : model::param_tensors(result.params))
        radii.push_back(std::sqrt(kernels::active().dot(t->data(), t->data(), t->size())));
    Rng perturb_rng = Rng::derive(cfg.seed, "perturb");
    data::Batcher batcher(train_set.size(), cfg.batch, cfg.seed);

    ad::Graph g;
    BatchAccum acc(result.params);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        double cls_sum = 0.0, fxts_sum = 0.0;
        int violations = 0, terms = 0;
        for (const auto& batch : batcher.epoch(epoch)) {
            acc.zero();
            for (const std::size_t idx : batch) {
                const SampleOutcome so = run_sample(g, local, result.params,
                                                    train_set.sample(idx), train_set.y[idx],
                                                    fxts_mode, perturb_rng, acc);
                cls_sum += so.cls;
                fxts_sum += so.fxts;
                violations += so.violations;
                terms += so.terms;
                if (!std::isfinite(so.cls) || !std::isfinite(so.fxts))
                    throw std::runtime_error("training diverged (non-finite loss) at epoch " +
                                             std::to_string(epoch + 1));
            }
            const double inv = 1.0 / double(batch.size());
            for (Tensor& grad : acc.grads)
                for (std::size_t i = 0; i < grad.size(); ++i) grad[i] *= inv;
            optimizer_step(result.params, acc.grads, cfg.lr);
            project_norms(result.params, radii);
        }

        EpochStats es;
        es.epoch = epoch + 1;
        es.cls_loss = cls_sum / double(train_set.size());
        es.fxts_loss = fxts_sum / double(train_set.size());
        es.train_err = error_rate(result.params, train_set, cfg.solver);
        es.test_err = error_rate(result.params, test_set, cfg.solver);
        es.violation_rate = terms > 0 ? double(violations) / double(terms) : 0.0;
        es.wall_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.report.epochs.push_back(es);
    }

    if (result.report.epochs.empty()) {
        // zero-epoch run: report the initial state
        EpochStats es;
        es.epoch = 0;
        es.train_err = error_rate(result.params, train_set, cfg.solver);
        es.test_err = error_rate(result.params, test_set, cfg.solver);
        result.report.epochs.push_back(es);
    }
    return result;
}

}  // namespace

TrainResult train_fxts(const TrainConfig& cfg, const data::Dataset& train_set,
                       const data::Dataset& test_set) {
    return run_training(cfg, train_set, test_set, /*fxts_mode=*/true);
}

TrainResult train_baseline(const TrainConfig& cfg, const data::Dataset& train_set,
                           const data::Dataset& test_set) {
    return run_training(cfg, train_set, test_set, /*fxts_mode=*/false);
}

void write_report_csv(const std::string& path, const TrainReport& report) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (f == nullptr) throw std::runtime_error("report: cannot open '" + path + "' for writing");
    std::fprintf(f, "# fxtsnet.report.v1\n");
    std::fprintf(f, "epoch,cls_loss,fxts_loss,train_err,test_err,violation_rate\n");
    for (const auto& e : report.epochs)
        std::fprintf(f, "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", e.epoch, e.cls_loss, e.fxts_loss,
                     e.train_err, e.test_err, e.violation_rate);
    std::fclose(f);
}

}  // namespace fxtsnet::train
