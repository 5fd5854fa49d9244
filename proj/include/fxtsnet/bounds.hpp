#pragma once

#include <span>
#include <string>
#include <vector>

// Fixed-time stability calculus for the relaxed Lyapunov condition
//   Vdot <= -alpha1 V^gamma1 - alpha2 V^gamma2 + delta,
// gamma1 = 1 + 1/mu, gamma2 = 1 - 1/mu, mu > 1: the settling-time ceiling
// mu*pi/(2 sqrt(alpha1 alpha2)), the balance root v of
// alpha1 v^(mu+1) + alpha2 v^(mu-1) = delta, closed-form upper bounds on the
// descent time from V0 to V_bar = (gamma v)^mu in three mu regimes, the
// matching robustness times with their pi/2 caps, and a quadrature oracle.
//
// Sign convention: the descent integral is returned as a positive elapsed
// time (integrating from V_bar up to V0 against the positive denominator
// alpha1 V^gamma1 + alpha2 V^gamma2 - delta).

namespace fxtsnet::bounds {

enum class Regime { kMuBelow2, kMu2To3, kMuAtLeast3 };

Regime regime_of(double mu);
std::string regime_name(Regime r);

struct BoundQuery {
    double V0 = 0.0;
    double alpha1 = 1.0;
    double alpha2 = 1.0;
    double delta = 1.0;
    double mu = 2.0;
    double gamma = 1.5;  // boundary multiplier, > 1

    void validate() const;
};

struct BoundResult {
    double v = 0.0;
    double V_bar = 0.0;
    double I_bound = 0.0;
    Regime regime = Regime::kMu2To3;
};

// Unique positive root of alpha1 v^(mu+1) + alpha2 v^(mu-1) = delta.
// Bisection on log(v) (monotone, bracketed; residual ~1e-15).
double solve_v(double alpha1, double alpha2, double mu, double delta);

// mu*pi/(2 sqrt(alpha1 alpha2))
double settling_time_max(double alpha1, double alpha2, double mu);

// Closed-form regime bound; rejects V0 < V_bar.
BoundResult bound_I(const BoundQuery& q);

// Adaptive-Simpson value of the descent integral, abs tol 1e-10.
double quadrature_I(const BoundQuery& q);

// Elapsed time from V_hi down to V_lo; delta = 0 allowed (V_lo must keep the
// denominator positive).
double quadrature_between(double V_lo, double V_hi, double alpha1, double alpha2, double mu,
                          double delta);

struct RobustnessQuery {
    double rho = 0.0;    // input perturbation bound
    double L = 0.0;      // L_V * L_f * L_phi
    double gamma = 1.5;  // > 1
    double alpha1 = 1.0;
    double alpha2 = 1.0;
    double mu = 2.0;
    double L_psi = 1.0;

    void validate() const;
};

struct RobustnessResult {
    double v = 0.0;
    double T = 0.0;
    double output_radius = 0.0;  // (gamma v)^mu * L_psi
};

RobustnessResult robustness_time(const RobustnessQuery& q);

struct RelaxedSimResult {
    bool converged = false;
    double time = 0.0;         // first crossing of stop_level (interpolated)
    double final_value = 0.0;  // V at the crossing, or at 10*T_max when not converged
};

// Integrates Vdot = -alpha1 V^gamma1 - alpha2 V^gamma2 + delta by RK4 and
// reports the first time V <= stop_level; gives up at t = 10*T_max.
RelaxedSimResult simulate_relaxed(double V0, double alpha1, double alpha2, double delta,
                                  double mu, double stop_level, double dt = 1e-4);

struct ScaleCurveRow {
    double V = 0.0;
    double err_free = 0.0;  // delta
    double v_scale = 0.0;   // delta * V (prior-work scaling)
    double ours1 = 0.0;     // delta * v^(1-mu) * V^(1-1/mu)
    double ours2 = 0.0;     // delta * v^(2-mu) * V^(1-2/mu)
    double ours3 = 0.0;     // delta * v^(3-mu) * V^(1-3/mu)
};

std::vector<ScaleCurveRow> scale_curves(double mu, double alpha1, double alpha2, double delta,
                                        std::span<const double> v_grid);

}  // namespace fxtsnet::bounds
