#include "fxtsnet/bounds.hpp"
#include <vector>

#include <cmath>
#include <stdexcept>

#include "fxtsnet/ode.hpp"

namespace fxtsnet::bounds {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

Regime regime_of(double mu) {
    if (mu < 2.0) return Regime::kMuBelow2;
    if (mu < 3.0) return Regime::kMu2To3;
    return Regime::kMuAtLeast3;
}

std::string regime_name(Regime r) {
    switch (r) {
        case Regime::kMuBelow2: return "mu<2";
        case Regime::kMu2To3: return "2<=mu<3";
        case Regime::kMuAtLeast3: return "mu>=3";
    }
    return "?";
}

void BoundQuery::validate() const {
    if (!(alpha1 > 0.0) || !(alpha2 > 0.0) || !(delta > 0.0))
        throw std::invalid_argument("bounds: alpha1, alpha2, delta must be > 0");
    if (!(mu > 1.0)) throw std::invalid_argument("bounds: mu must be > 1");
    if (!(gamma > 1.0)) throw std::invalid_argument("bounds: gamma must be > 1");
    if (!(V0 > 0.0)) throw std::invalid_argument("bounds: V0 must be > 0");
}

void RobustnessQuery::validate() const {
    if (!(rho > 0.0) || !(L > 0.0) || !(L_psi > 0.0))
        throw std::invalid_argument("bounds: rho, L, L_psi must be > 0");
    if (!(alpha1 > 0.0) || !(alpha2 > 0.0))
        throw std::invalid_argument("bounds: alpha1, alpha2 must be > 0");
    if (!(mu > 1.0)) throw std::invalid_argument("bounds: mu must be > 1");
    if (!(gamma > 1.0)) throw std::invalid_argument("bounds: gamma must be > 1");
}

double solve_v(double alpha1, double alpha2, double mu, double delta) {
    if (!(alpha1 > 0.0) || !(alpha2 > 0.0) || !(delta > 0.0) || !(mu > 1.0))
        throw std::invalid_argument("solve_v: positive arguments and mu > 1 required");
    auto balance = [&](double lv) {
        return alpha1 * std::exp(lv * (mu + 1.0)) + alpha2 * std::exp(lv * (mu - 1.0)) - delta;
    };
    const double v_hi = std::max({1.0, std::pow(delta / alpha1, 1.0 / (mu + 1.0)),
                                  std::pow(delta / alpha2, 1.0 / (mu - 1.0))});
    double hi = std::log(1.1 * v_hi);
    double lo = -700.0;  // below exp(lo) the root is not representable
    if (!(balance(lo) < 0.0))
        throw std::invalid_argument("solve_v: root underflows f64 (mu too close to 1)");
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (balance(mid) > 0.0)
            hi = mid;
        else
            lo = mid;
    }
    return std::exp(0.5 * (lo + hi));
}

double settling_time_max(double alpha1, double alpha2, double mu) {
    if (!(alpha1 > 0.0) || !(alpha2 > 0.0) || !(mu > 1.0))
        throw std::invalid_argument("settling_time_max: positive arguments and mu > 1 required");
    return mu * kPi / (2.0 * std::sqrt(alpha1 * alpha2));
}

BoundResult bound_I(const BoundQuery& q) {
    q.validate();
    BoundResult r;
    r.v = solve_v(q.alpha1, q.alpha2, q.mu, q.delta);
    r.V_bar = std::pow(q.gamma * r.v, q.mu);
    r.regime = regime_of(q.mu);
    if (q.V0 < r.V_bar)
        throw std::invalid_argument("bound_I: V0 < V_bar violates the bound hypothesis");

    const double v = r.v;
    const double z0 = std::pow(q.V0, 1.0 / q.mu);
    const double ratio = q.alpha2 / q.alpha1;
    switch (r.regime) {
        case Regime::kMuBelow2: {
            r.I_bound = q.mu / (2.0 * q.alpha1 * v) *
                        (std::log(std::abs((1.0 + q.gamma) / (q.gamma - 1.0))) +
                         std::log(std::abs((z0 - v) / (z0 + v))));
            break;
        }
        case Regime::kMu2To3: {
            const double k1 = q.mu * v / (6.0 * q.alpha1 * v * v + 2.0 * q.alpha2);
            const double s = std::sqrt(3.0 * v * v + 4.0 * ratio);
            const double k2 = (6.0 * v + 4.0 * ratio / v) / s;
            const double t1 = std::log(
                std::abs(((q.gamma * q.gamma + q.gamma + 1.0) * v * v + ratio) /
                         ((q.gamma - 1.0) * v * ((q.gamma - 1.0) * v))));
            const double t2 = std::log(
                std::abs((z0 - v) * (z0 - v) / (z0 * z0 + v * z0 + v * v + ratio)));
            const double t3 = k2 * (std::atan((2.0 * z0 + v) / s) -
                                    std::atan((2.0 * q.gamma + 1.0) * v / s));
            r.I_bound = k1 * (t1 + t2 + t3);
            break;
        }
        case Regime::kMuAtLeast3: {
            const double k3 = q.mu / (2.0 * q.alpha1 * v * v + q.alpha2);
            const double k4 = std::sqrt(v * v + ratio);
            const double t1 = 0.5 * v *
                              (std::log(std::abs((1.0 + q.gamma) / (1.0 - q.gamma))) +
                               std::log(std::abs((z0 - v) / (z0 + v))));
            const double t2 = k4 * (std::atan(z0 / k4) - std::atan(q.gamma * v / k4));
            r.I_bound = k3 * (t1 + t2);
            break;
        }
    }
    return r;
}

// ---- adaptive Simpson -----------------------------------------------------------

namespace {

struct SimpsonCtx {
    double alpha1, alpha2, gamma1, gamma2, delta;
    long evals = 0;

    double f(double V) {
        ++evals;
        if (evals > 2'000'000)
            throw std::runtime_error("quadrature_I: tolerance not reached within eval budget");
        return 1.0 / (alpha1 * std::pow(V, gamma1) + alpha2 * std::pow(V, gamma2) - delta);
    }
};

double simpson(double h, double fa, double fm, double fb) {
    return h / 6.0 * (fa + 4.0 * fm + fb);
}

double adapt(SimpsonCtx& ctx, double a, double b, double fa, double fm, double fb, double whole,
             double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = ctx.f(lm), frm = ctx.f(rm);
    const double left = simpson(m - a, fa, flm, fm);
    const double right = simpson(b - m, fm, frm, fb);
    const double err = left + right - whole;
    if (std::abs(err) <= 15.0 * tol || depth >= 60) return left + right + err / 15.0;
    return adapt(ctx, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) +
           adapt(ctx, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
}

}  // namespace

double quadrature_between(double V_lo, double V_hi, double alpha1, double alpha2, double mu,
                          double delta) {
    if (!(mu > 1.0)) throw std::invalid_argument("quadrature: mu must be > 1");
    if (!(V_lo > 0.0) || V_hi < V_lo)
        throw std::invalid_argument("quadrature: need 0 < V_lo <= V_hi");
    if (V_hi == V_lo) return 0.0;
    SimpsonCtx ctx{alpha1, alpha2, 1.0 + 1.0 / mu, 1.0 - 1.0 / mu, delta};
    if (!(ctx.f(V_lo) > 0.0))
        throw std::invalid_argument("quadrature: denominator not positive at V_lo");
    ctx.evals = 0;

    // octave panels keep the adaptive recursion well scaled on wide ranges
    std::vector<double> edges{V_lo};
    while (edges.back() * 2.0 < V_hi) edges.push_back(edges.back() * 2.0);
    edges.push_back(V_hi);
    const double tol = 1e-10 / static_cast<double>(edges.size() - 1);

    double total = 0.0;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        const double a = edges[i], b = edges[i + 1];
        const double fa = ctx.f(a);
        const double m = 0.5 * (a + b);
        const double fm = ctx.f(m), fb = ctx.f(b);
        total += adapt(ctx, a, b, fa, fm, fb, simpson(b - a, fa, fm, fb), tol, 0);
    }
    return total;
}

double quadrature_I(const BoundQuery& q) {
    q.validate();
    const double v = solve_v(q.alpha1, q.alpha2, q.mu, q.delta);
    const double V_bar = std::pow(q.gamma * v, q.mu);
    if (q.V0 < V_bar)
        throw std::invalid_argument("quadrature_I: V0 < V_bar violates the bound hypothesis");
    return quadrature_between(V_bar, q.V0, q.alpha1, q.alpha2, q.mu, q.delta);
}

RobustnessResult robustness_time(const RobustnessQuery& q) {
    q.validate();
    RobustnessResult r;
    r.v = solve_v(q.alpha1, q.alpha2, q.mu, q.L * q.rho);
    r.output_radius = std::pow(q.gamma * r.v, q.mu) * q.L_psi;
    const double v = r.v;
    const double ratio = q.alpha2 / q.alpha1;
    switch (regime_of(q.mu)) {
        case Regime::kMuBelow2:
            r.T = q.mu / (2.0 * q.alpha1 * v) *
                  std::log(std::abs((1.0 + q.gamma) / (q.gamma - 1.0)));
            break;
        case Regime::kMu2To3: {
            const double k1 = q.mu * v / (6.0 * q.alpha1 * v * v + 2.0 * q.alpha2);
            const double s = std::sqrt(3.0 * v * v + 4.0 * ratio);
            const double k2 = (6.0 * v + 4.0 * ratio / v) / s;
            const double t1 = std::log(
                std::abs(((q.gamma * q.gamma + q.gamma + 1.0) * v * v + ratio) /
                         ((q.gamma - 1.0) * v * ((q.gamma - 1.0) * v))));
            r.T = k1 * (t1 + k2 * (kPi / 2.0 - std::atan((2.0 * q.gamma + 1.0) * v / s)));
            break;
        }
        case Regime::kMuAtLeast3: {
            const double k3 = q.mu / (2.0 * q.alpha1 * v * v + q.alpha2);
            const double k4 = std::sqrt(v * v + ratio);
            r.T = k3 * (0.5 * v * std::log(std::abs((1.0 + q.gamma) / (1.0 - q.gamma))) +
                        k4 * (kPi / 2.0 - std::atan(q.gamma * v / k4)));
            break;
        }
    }
    return r;
}

RelaxedSimResult simulate_relaxed(double V0, double alpha1, double alpha2, double delta,
                                  double mu, double stop_level, double dt) {
    if (!(V0 > 0.0)) throw std::invalid_argument("simulate_relaxed: V0 must be > 0");
    if (delta < 0.0) throw std::invalid_argument("simulate_relaxed: delta must be >= 0");
    if (!(dt > 0.0)) throw std::invalid_argument("simulate_relaxed: dt must be > 0");
    const double gamma1 = 1.0 + 1.0 / mu;
    const double gamma2 = 1.0 - 1.0 / mu;
    const double t_end = 10.0 * settling_time_max(alpha1, alpha2, mu);
    auto field = [&](double, double V) {
        const double Vp = V > 0.0 ? V : 0.0;
        return -alpha1 * std::pow(Vp, gamma1) - alpha2 * std::pow(Vp, gamma2) + delta;
    };

    ode::ScalarAlgebra alg;
    double V = V0;
    double t = 0.0;
    if (V <= stop_level) return {true, 0.0, V};
    while (t < t_end) {
        const double V_next = ode::rk4_step(alg, field, t, V, dt);
        if (V_next <= stop_level) {
            const double frac = (V - stop_level) / (V - V_next);
            return {true, t + dt * frac, stop_level};
        }
        V = V_next;
        t += dt;
    }
    return {false, t_end, V};
}

std::vector<ScaleCurveRow> scale_curves(double mu, double alpha1, double alpha2, double delta,
                                        std::span<const double> v_grid) {
    const double v = solve_v(alpha1, alpha2, mu, delta);
    std::vector<ScaleCurveRow> rows;
    rows.reserve(v_grid.size());
    for (double V : v_grid) {
        if (!(V > 0.0)) throw std::invalid_argument("scale_curves: V grid must be positive");
        ScaleCurveRow r;
        r.V = V;
        r.err_free = delta;
        r.v_scale = delta * V;
        r.ours1 = delta * std::pow(v, 1.0 - mu) * std::pow(V, 1.0 - 1.0 / mu);
        r.ours2 = delta * std::pow(v, 2.0 - mu) * std::pow(V, 1.0 - 2.0 / mu);
        r.ours3 = delta * std::pow(v, 3.0 - mu) * std::pow(V, 1.0 - 3.0 / mu);
        rows.push_back(r);
    }
    return rows;
}

}  // namespace fxtsnet::bounds
