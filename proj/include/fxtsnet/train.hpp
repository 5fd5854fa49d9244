#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fxtsnet/data.hpp"
#include "fxtsnet/fxts.hpp"
#include "fxtsnet/lyapunov.hpp"
#include "fxtsnet/model.hpp"
#include "fxtsnet/ode.hpp"

// The robust FxTS training loop (per batch: forward trajectory, anchor via
// the inner loop, perturbation trajectories, lambda*fxts + cls loss, one
// optimizer update) plus the plain supervised baseline. Fully deterministic
// per (config, dataset, seed); independent RNG streams for init, batching
// and perturbation sampling.

namespace fxtsnet::train {

struct TrainConfig {
    model::Dims dims;
    ode::SolverConfig solver;
    fxts::FxtsParams fxts_params;
    fxts::PerturbationConfig perturb;  // dim is forced to dims.d_c
    double lr = 0.01;                  // eta1
    int epochs = 50;                   // N1 (full passes)
    double inner_lr = 2.0;             // eta2
    int inner_iters = 3;               // N2
    double lambda = 1.0;               // FxTS-loss weight
    double anchor_box = 1.0;           // inner-loop projection box: the realized H
    int batch = 64;
    std::uint64_t seed = 1;

    void validate() const;
};

struct EpochStats {
    int epoch = 0;
    double cls_loss = 0.0;
    double fxts_loss = 0.0;
    double train_err = 0.0;
    double test_err = 0.0;
    double violation_rate = 0.0;
    double wall_time_s = 0.0;
};

struct TrainReport {
    std::vector<EpochStats> epochs;
    const EpochStats& final() const { return epochs.back(); }
};

struct TrainResult {
    model::ModelParams params;
    TrainReport report;
};

TrainResult train_fxts(const TrainConfig& cfg, const data::Dataset& train_set,
                       const data::Dataset& test_set);
TrainResult train_baseline(const TrainConfig& cfg, const data::Dataset& train_set,
                           const data::Dataset& test_set);

// Per-layer norm-preserving update:
// theta <- theta - lr * (||theta||_2 / (||g||_2 + 1e-12)) * g.
void optimizer_step(model::ModelParams& params, const std::vector<Tensor>& grads, double lr);

// Classification error rate of a checkpoint over a dataset.
double error_rate(const model::ModelParams& params, const data::Dataset& ds,
                  const ode::SolverConfig& solver);

// Writes the per-epoch report CSV (epoch, cls_loss, fxts_loss, train_err,
// test_err, violation_rate).
void write_report_csv(const std::string& path, const TrainReport& report);

}  // namespace fxtsnet::train
