#pragma once

#include <span>
#include <vector>

#include "fxtsnet/autodiff.hpp"
#include "fxtsnet/lyapunov.hpp"
#include "fxtsnet/model.hpp"
#include "fxtsnet/ode.hpp"
#include "fxtsnet/rng.hpp"
#include "fxtsnet/tensor.hpp"

// Point-wise FxTS loss max{0, dV/dh . f + a1 V^g1 + a2 V^g2}, simulated
// perturbation sampling of the extracted features, and the sampled FxTS-Loss
// aggregate: perturbed trajectories integrate their own recursion from
// h(0) = 0 with only x_c perturbed inside f. The time integral is the
// right-endpoint Riemann sum over knots t_1..t_Gamma with weight 1/Gamma.

namespace fxtsnet::fxts {

struct FxtsParams {
    double alpha1 = 10.0;
    double alpha2 = 1.0;
    double mu = 2.0;
    double gamma1 = 1.5;  // 1 + 1/mu
    double gamma2 = 0.5;  // 1 - 1/mu

    FxtsParams() = default;
    FxtsParams(double a1, double a2, double mu_);
};

struct PerturbationConfig {
    int n_delta = 0;          // number of sampled perturbations
    double varsigma_max = 0;  // maximum disturbance radius
    int dim = 0;              // feature dimension d_c

    void validate() const;
};

// ---- point-wise loss -----------------------------------------------------------

double pointwise_loss(const Tensor& h, const lyapunov::LyapunovAnchor& anchor,
                      const Tensor& f_val, const FxtsParams& p);

ad::NodeId pointwise_loss_node(ad::Graph& g, ad::NodeId h, ad::NodeId h_star_const,
                               ad::NodeId f_val, const FxtsParams& p);

// ---- perturbation sampling -------------------------------------------------------

struct Perturbation {
    Tensor unit_dir;      // delta_j / ||delta_j||
    double radius = 0.0;  // varsigma_j ~ U(0, varsigma_max)
};

// Draws n_delta (direction, radius) pairs; directions are redrawn in the
// (measure-zero) event ||delta|| < 1e-12.
std::vector<Perturbation> draw_perturbations(const PerturbationConfig& cfg, Rng& rng);

// x_c + varsigma_j ||x_c||_2 delta_j/||delta_j||_2 for each j.
std::vector<Tensor> sample_perturbations(const Tensor& x_c, const PerturbationConfig& cfg,
                                         Rng& rng);

// Same construction as a graph node; the norm factor keeps its gradient
// path into x_c.
ad::NodeId perturbed_features_node(ad::Graph& g, ad::NodeId x_c, const Perturbation& pert);

// ---- knot sums ------------------------------------------------------------------

struct KnotSum {
    ad::NodeId node;     // (1/Gamma) sum_i pointwise(h(t_i), t_i)
    int violations = 0;  // knots with pointwise value > 1e-3
    int terms = 0;
};

inline constexpr double kViolationThreshold = 1e-3;

// One trajectory's contribution: integrates h under features x_c_used and
// sums the point-wise loss at knots 1..Gamma.
KnotSum trajectory_knot_sum(ad::Graph& g, const model::ParamNodes& p, ad::NodeId x_c_used,
                            ad::NodeId h_star_const, const FxtsParams& fp,
                            const ode::SolverConfig& solver);

// ---- aggregate (Eq. 14 estimate) -------------------------------------------------

struct FxtsStats {
    double loss = 0.0;       // batch-averaged sum over perturbations
    int violations = 0;
    int terms = 0;
    double violation_rate() const { return terms == 0 ? 0.0 : double(violations) / terms; }
};

// Value-only evaluation over a batch. With n_delta = 0 the knot sum is taken
// on the unperturbed trajectory and the RNG is not consumed.
FxtsStats fxts_stats(std::span<const Tensor> xs, std::span<const int> ys,
                     const model::ModelParams& params,
                     std::span<const lyapunov::LyapunovAnchor> anchors,
                     const PerturbationConfig& cfg, const FxtsParams& fp,
                     const ode::SolverConfig& solver, Rng& rng);

double fxts_loss(std::span<const Tensor> xs, std::span<const int> ys,
                 const model::ModelParams& params,
                 std::span<const lyapunov::LyapunovAnchor> anchors, const PerturbationConfig& cfg,
                 const FxtsParams& fp, const ode::SolverConfig& solver, Rng& rng);

}  // namespace fxtsnet::fxts
