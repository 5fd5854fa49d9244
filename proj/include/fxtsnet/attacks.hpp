#pragma once

#include <functional>

#include "fxtsnet/model.hpp"
#include "fxtsnet/ode.hpp"
#include "fxtsnet/rng.hpp"
#include "fxtsnet/tensor.hpp"

// Input-space perturbations for robustness evaluation: FGSM, BIM/PGD with
// L-infinity projection, and Gaussian/impulse corruption. All gradients are
// taken through the full trajectory w.r.t. the input x.

namespace fxtsnet::attacks {

struct Domain {
    double lo = -3.0;
    double hi = 3.0;
};

inline constexpr Domain kSyntheticDomain{-3.0, 3.0};
inline constexpr Domain kImageDomain{0.0, 1.0};

struct AttackConfig {
    double epsilon = 0.0;     // L-infinity radius
    int steps = 10;           // BIM/PGD iterations
    double step_size = 0.0;   // 0 selects the epsilon/4 default
    bool random_start = true; // PGD true, BIM false

    void validate() const;
};

// x + eps * sign(grad_x L_cls(yhat(1), y)), clipped to the domain box.
// sign(0) = 0, so zero-gradient coordinates stay put.
Tensor fgsm(const model::ModelParams& params, const ode::SolverConfig& solver, const Tensor& x,
            int label, double epsilon, const Domain& domain);

// Iterated sign-gradient ascent with projection onto the epsilon ball after
// every step. on_iter (when set) observes each iterate, projection included.
Tensor pgd(const model::ModelParams& params, const ode::SolverConfig& solver, const Tensor& x,
           int label, const AttackConfig& cfg, const Domain& domain, Rng& rng,
           const std::function<void(const Tensor&)>& on_iter = nullptr);

Tensor corrupt_gaussian(const Tensor& x, double sigma, Rng& rng);
Tensor corrupt_impulse(const Tensor& x, double p, const Domain& domain, Rng& rng);

// Loss and input gradient of one sample (used by the attacks and by tests).
double cls_loss(const model::ModelParams& params, const ode::SolverConfig& solver,
                const Tensor& x, int label);
Tensor cls_loss_grad_x(const model::ModelParams& params, const ode::SolverConfig& solver,
                       const Tensor& x, int label);

}  // namespace fxtsnet::attacks
