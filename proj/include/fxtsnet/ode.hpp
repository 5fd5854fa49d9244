#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "fxtsnet/autodiff.hpp"
#include "fxtsnet/kernels.hpp"
#include "fxtsnet/tensor.hpp"

// Classical fixed-step RK4 over [0, 1] with trajectory capture at the knots.
// One rk4_step source of truth, instantiated over three state algebras:
// graph nodes (training, discretize-then-optimize), tensors (plain forward
// evaluation) and doubles (the 1-d Lyapunov comparison ODE in bounds). The
// tensor algebra mirrors the graph algebra's arithmetic term for term, so
// both produce bit-identical trajectories for the same vector field.

namespace fxtsnet::ode {

struct SolverConfig {
    int knots = 5;    // number of knot intervals over [0, 1]
    int substeps = 4; // RK4 steps per knot interval

    double dt() const { return (1.0 / knots) / substeps; }

    void validate() const {
        if (knots < 1) throw std::invalid_argument("solver: knots must be >= 1");
        if (substeps < 1) throw std::invalid_argument("solver: substeps must be >= 1");
        if (dt() > 0.25) throw std::invalid_argument("solver: step size 1/(knots*substeps) > 0.25");
    }
};

// Knot times are defined as i * (1.0 / knots); tests pin this formula.
inline double knot_time(int i, int knots) { return i * (1.0 / knots); }

struct Trajectory {
    std::vector<double> times;
    std::vector<Tensor> states;  // knots + 1 entries, states[0] = h(0)
};

// ---- state algebras ---------------------------------------------------------

struct GraphAlgebra {
    using State = ad::NodeId;
    ad::Graph& g;

    State axpy(State h, double c, State k) { return g.axpy(h, c, k); }
    State combine(State h, double dt, State k1, State k2, State k3, State k4) {
        const State s = g.wsum3(k1, k2, k3, 2.0, 2.0);  // k1 + 2 k2 + 2 k3
        return g.wsum3(h, s, k4, dt / 6.0, dt / 6.0);
    }
    bool finite(State s) const {
        for (double v : g.view(s))
            if (!std::isfinite(v)) return false;
        return true;
    }
};

struct TensorAlgebra {
    using State = Tensor;

    State axpy(const State& h, double c, const State& k) const {
        const auto& ops = kernels::active();
        Tensor tmp = Tensor::zeros(h.rows(), h.cols());
        ops.scal(c, k.data(), tmp.data(), k.size());
        Tensor out = Tensor::zeros(h.rows(), h.cols());
        ops.add(h.data(), tmp.data(), out.data(), h.size());
        return out;
    }  // scal-then-add matches the graph kAxpy kernel sequence
    State combine(const State& h, double dt, const State& k1, const State& k2, const State& k3,
                  const State& k4) const {
        // mirrors the graph algebra's wsum3 pair term for term
        const std::size_t n = h.size();
        Tensor s = Tensor::zeros(h.rows(), h.cols());
        for (std::size_t i = 0; i < n; ++i) s[i] = (k1[i] + 2.0 * k2[i]) + 2.0 * k3[i];
        Tensor out = Tensor::zeros(h.rows(), h.cols());
        const double w = dt / 6.0;
        for (std::size_t i = 0; i < n; ++i) out[i] = (h[i] + w * s[i]) + w * k4[i];
        return out;
    }
    bool finite(const State& s) const { return s.all_finite(); }
};

struct ScalarAlgebra {
    using State = double;
    State axpy(State h, double c, State k) const { return h + c * k; }
    State combine(State h, double dt, State k1, State k2, State k3, State k4) const {
        const double s = (k1 + 2.0 * k2) + 2.0 * k3;
        return (h + (dt / 6.0) * s) + (dt / 6.0) * k4;
    }
    bool finite(State s) const { return std::isfinite(s); }
};

// ---- RK4 ---------------------------------------------------------------------

template <class Algebra, class Field>
typename Algebra::State rk4_step(Algebra& alg, Field&& f, double t,
                                 const typename Algebra::State& h, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("rk4_step: dt must be positive");
    const auto k1 = f(t, h);
    const auto k2 = f(t + dt / 2.0, alg.axpy(h, dt / 2.0, k1));
    const auto k3 = f(t + dt / 2.0, alg.axpy(h, dt / 2.0, k2));
    const auto k4 = f(t + dt, alg.axpy(h, dt, k3));
    auto next = alg.combine(h, dt, k1, k2, k3, k4);
    if (!alg.finite(k1) || !alg.finite(k2) || !alg.finite(k3) || !alg.finite(k4) ||
        !alg.finite(next))
        throw std::runtime_error("rk4_step: non-finite stage value");
    return next;
}

// States at all knots 0..knots; states[0] = h0.
template <class Algebra, class Field>
std::vector<typename Algebra::State> integrate_knots(Algebra& alg, Field&& f,
                                                     const typename Algebra::State& h0,
                                                     const SolverConfig& cfg) {
    cfg.validate();
    if (!alg.finite(h0)) throw std::invalid_argument("integrate: non-finite initial state");
    std::vector<typename Algebra::State> knots;
    knots.reserve(static_cast<std::size_t>(cfg.knots) + 1);
    knots.push_back(h0);
    const double dt = cfg.dt();
    for (int i = 1; i <= cfg.knots; ++i) {
        auto h = knots.back();
        for (int s = 0; s < cfg.substeps; ++s) {
            const double t = knot_time(i - 1, cfg.knots) + s * dt;
            try {
                h = rk4_step(alg, f, t, h, dt);
            } catch (const std::runtime_error& e) {
                throw std::runtime_error(std::string(e.what()) + " at knot " + std::to_string(i));
            }
        }
        knots.push_back(h);
    }
    return knots;
}

// Tensor-level trajectory (plain forward evaluation).
template <class Field>
Trajectory integrate_trajectory(Field&& f, const Tensor& h0, const SolverConfig& cfg) {
    TensorAlgebra alg;
    auto states = integrate_knots(alg, f, h0, cfg);
    Trajectory traj;
    traj.states = std::move(states);
    traj.times.reserve(traj.states.size());
    for (int i = 0; i <= cfg.knots; ++i) traj.times.push_back(knot_time(i, cfg.knots));
    return traj;
}

}  // namespace fxtsnet::ode
