#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <vector>

#include "fxtsnet/model.hpp"
#include "fxtsnet/rng.hpp"
#include "support.hpp"

using namespace fxtsnet;
using testsupport::random_tensor;

namespace {

model::Dims small_dims() {
    model::Dims d;
    d.d_x = 3;
    d.d_c = 4;
    d.d_h = 4;
    d.hidden = 5;
    d.classes = 3;
    return d;
}

// Straight-line re-implementation of the three maps, no autodiff machinery.
std::vector<double> straight_affine(const Tensor& w, const Tensor& b,
                                    const std::vector<double>& x) {
    std::vector<double> out(w.rows(), 0.0);
    for (std::size_t r = 0; r < w.rows(); ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < w.cols(); ++c) acc += w.at(r, c) * x[c];
        out[r] = acc + b[r];
    }
    return out;
}

std::vector<double> straight_tanh(std::vector<double> v) {
    for (auto& x : v) x = std::tanh(x);
    return v;
}

std::vector<double> straight_phi(const model::ModelParams& p, const std::vector<double>& x) {
    return straight_affine(p.phi_w2, p.phi_b2, straight_tanh(straight_affine(p.phi_w1, p.phi_b1, x)));
}

std::vector<double> straight_f(const model::ModelParams& p, double t,
                               const std::vector<double>& xc, const std::vector<double>& h) {
    std::vector<double> z = h;
    z.insert(z.end(), xc.begin(), xc.end());
    z.push_back(t);
    auto l1 = straight_tanh(straight_affine(p.f_w1, p.f_b1, z));
    auto l2 = straight_tanh(straight_affine(p.f_w2, p.f_b2, l1));
    return straight_affine(p.f_w3, p.f_b3, l2);
}

model::ModelParams zero_params(const model::Dims& d) {
    model::ModelParams p = model::ModelParams::init(d, 0);
    p.for_each([](const char*, Tensor& t) {
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = 0.0;
    });
    return p;
}

}  // namespace

TEST_CASE("extract_features: zero weights and identity-style cases") {
    const auto dims = small_dims();
    const model::ModelParams zeros = zero_params(dims);
    ad::Graph g;
    const auto pn = bind(g, zeros, false);
    const auto xc = model::extract_features(g, pn, g.constant(Tensor{1.0, -2.0, 0.5}));
    for (const double v : g.view(xc)) CHECK(v == 0.0);

    // tanh(0) = 0 through any weights when x = 0 and biases are zero
    model::ModelParams p = model::ModelParams::init(dims, 3);
    for (std::size_t i = 0; i < p.phi_b1.size(); ++i) p.phi_b1[i] = 0.0;
    for (std::size_t i = 0; i < p.phi_b2.size(); ++i) p.phi_b2[i] = 0.0;
    ad::Graph g2;
    const auto pn2 = bind(g2, p, false);
    const auto xc2 = model::extract_features(g2, pn2, g2.constant(Tensor{0.0, 0.0, 0.0}));
    for (const double v : g2.view(xc2)) CHECK(v == 0.0);
}

TEST_CASE("seed-0 weights match the straight-line oracle") {
    const auto dims = small_dims();
    const model::ModelParams p = model::ModelParams::init(dims, 0);

    std::vector<double> e1(std::size_t(dims.d_x), 0.0);
    e1[0] = 1.0;
    const auto phi_oracle = straight_phi(p, e1);
    ad::Graph g;
    const auto pn = bind(g, p, false);
    const auto xc = model::extract_features(g, pn, g.constant(Tensor{1.0, 0.0, 0.0}));
    const auto view = g.view(xc);
    REQUIRE(view.size() == phi_oracle.size());
    for (std::size_t i = 0; i < view.size(); ++i)
        CHECK(view[i] == doctest::Approx(phi_oracle[i]).epsilon(1e-14));

    const std::vector<double> h0{0.3, -0.2, 0.9, 0.1};
    const std::vector<double> xc0{0.5, 0.25, -0.75, 1.0};
    const auto f_oracle = straight_f(p, 0.37, xc0, h0);
    ad::Graph g2;
    const auto pn2 = bind(g2, p, false);
    const auto fv = model::dynamics(g2, pn2, 0.37,
                                    g2.constant(Tensor::vector(std::vector<double>(xc0))),
                                    g2.constant(Tensor::vector(std::vector<double>(h0))));
    const auto fview = g2.view(fv);
    for (std::size_t i = 0; i < fview.size(); ++i)
        CHECK(fview[i] == doctest::Approx(f_oracle[i]).epsilon(1e-14));

    const auto psi_oracle = straight_affine(p.psi_w, p.psi_b, h0);
    ad::Graph g3;
    const auto pn3 = bind(g3, p, false);
    const auto logits =
        model::predict(g3, pn3, g3.constant(Tensor::vector(std::vector<double>(h0))));
    const auto lview = g3.view(logits);
    for (std::size_t i = 0; i < lview.size(); ++i)
        CHECK(lview[i] == doctest::Approx(psi_oracle[i]).epsilon(1e-14));
}

TEST_CASE("dynamics has no cross-sample coupling and zero weights give a zero field") {
    const auto dims = small_dims();
    const model::ModelParams zeros = zero_params(dims);
    ad::Graph g;
    Rng rng0(5);
    const auto pn = bind(g, zeros, false);
    const auto f1 = model::dynamics(g, pn, 0.5, g.constant(random_tensor(4, 1, rng0)),
                                    g.constant(random_tensor(4, 1, rng0)));
    for (const double v : g.view(f1)) CHECK(v == 0.0);

    // per-sample map: same (t, x_c, h) gives the same value regardless of
    // what else was evaluated before
    const model::ModelParams p = model::ModelParams::init(dims, 9);
    Rng rng(7);
    const Tensor xc = random_tensor(4, 1, rng), h = random_tensor(4, 1, rng);
    ad::Graph ga;
    const auto pa = bind(ga, p, false);
    const auto va = ga.view(model::dynamics(ga, pa, 0.25, ga.constant(xc), ga.constant(h)));
    ad::Graph gb;
    const auto pb = bind(gb, p, false);
    gb.constant(random_tensor(4, 1, rng));  // unrelated extra nodes
    const auto vb = gb.view(model::dynamics(gb, pb, 0.25, gb.constant(xc), gb.constant(h)));
    for (std::size_t i = 0; i < va.size(); ++i) CHECK(va[i] == vb[i]);
}

TEST_CASE("predict ties break to the lowest index; identity map picks the hot unit") {
    CHECK(model::argmax(Tensor{0.0, 0.0, 0.0}) == 0);
    CHECK(model::argmax(Tensor{0.0, 1.0, 1.0}) == 1);

    model::Dims dims = small_dims();
    dims.d_h = 3;
    dims.classes = 3;
    model::ModelParams p = zero_params(dims);
    for (int i = 0; i < 3; ++i) p.psi_w.at(std::size_t(i), std::size_t(i)) = 1.0;
    ad::Graph g;
    const auto pn = bind(g, p, false);
    const auto logits = model::predict(g, pn, g.constant(Tensor{0.0, 0.0, 1.0}));
    CHECK(model::argmax(g.value(logits)) == 2);
}

TEST_CASE("forward: zero field freezes the state; repeat runs are bit-identical") {
    const auto dims = small_dims();
    const model::ModelParams zeros = zero_params(dims);
    const auto fwd = model::forward(Tensor{1.0, 2.0, 3.0}, zeros, {5, 4});
    REQUIRE(fwd.traj.states.size() == 6);
    for (const auto& s : fwd.traj.states)
        for (std::size_t i = 0; i < s.size(); ++i) CHECK(s[i] == 0.0);

    const model::ModelParams p = model::ModelParams::init(dims, 11);
    const Tensor x{0.2, -0.4, 1.0};
    const auto a = model::forward(x, p, {5, 4});
    const auto b = model::forward(x, p, {5, 4});
    for (std::size_t k = 0; k < a.traj.states.size(); ++k)
        for (std::size_t i = 0; i < a.traj.states[k].size(); ++i)
            CHECK(a.traj.states[k][i] == b.traj.states[k][i]);
    for (std::size_t i = 0; i < a.logits.size(); ++i) CHECK(a.logits[i] == b.logits[i]);
}

TEST_CASE("forward endpoint equals a manual RK4 unroll") {
    const auto dims = small_dims();
    const model::ModelParams p = model::ModelParams::init(dims, 13);
    const Tensor x{0.5, -0.1, 0.8};
    const ode::SolverConfig cfg{2, 2};
    const auto fwd = model::forward(x, p, cfg);

    const auto xc = straight_phi(p, {0.5, -0.1, 0.8});
    std::vector<double> h(std::size_t(dims.d_h), 0.0);
    const double dt = cfg.dt();
    for (int i = 1; i <= cfg.knots; ++i) {
        for (int s = 0; s < cfg.substeps; ++s) {
            const double t = ode::knot_time(i - 1, cfg.knots) + s * dt;
            auto eval = [&](double tt, const std::vector<double>& hh) {
                return straight_f(p, tt, xc, hh);
            };
            auto axpy = [&](const std::vector<double>& base, double c,
                            const std::vector<double>& k) {
                auto out = base;
                for (std::size_t j = 0; j < out.size(); ++j) out[j] += c * k[j];
                return out;
            };
            const auto k1 = eval(t, h);
            const auto k2 = eval(t + dt / 2, axpy(h, dt / 2, k1));
            const auto k3 = eval(t + dt / 2, axpy(h, dt / 2, k2));
            const auto k4 = eval(t + dt, axpy(h, dt, k3));
            for (std::size_t j = 0; j < h.size(); ++j)
                h[j] += dt / 6.0 * ((k1[j] + 2 * k2[j]) + (2 * k3[j] + k4[j]));
        }
    }
    for (std::size_t j = 0; j < h.size(); ++j)
        CHECK(fwd.traj.states.back()[j] == doctest::Approx(h[j]).epsilon(1e-12));
}

TEST_CASE("spectral norm: scaled identity, zero matrix, random probes") {
    Tensor eye2 = Tensor::matrix(3, 3, {2, 0, 0, 0, 2, 0, 0, 0, 2});
    CHECK(model::spectral_norm(eye2) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(model::spectral_norm(Tensor::zeros(4, 4)) == 0.0);

    Rng rng(17);
    const Tensor w = random_tensor(3, 3, rng, -1.0, 1.0);
    const double bound = model::spectral_norm(w);
    for (int rep = 0; rep < 100; ++rep) {
        Tensor u = random_tensor(3, 1, rng, -1.0, 1.0);
        double un = 0.0, wn = 0.0;
        std::vector<double> wu(3, 0.0);
        for (std::size_t r = 0; r < 3; ++r)
            for (std::size_t c = 0; c < 3; ++c) wu[r] += w.at(r, c) * u[c];
        for (std::size_t i = 0; i < 3; ++i) {
            un += u[i] * u[i];
            wn += wu[i] * wu[i];
        }
        CHECK(bound >= std::sqrt(wn / un) * (1.0 - 1e-10));
    }
}

TEST_CASE("phi is Lipschitz with constant lipschitz_phi on 1000 random pairs") {
    const auto dims = small_dims();
    const model::ModelParams p = model::ModelParams::init(dims, 19);
    const double L = model::lipschitz_phi(p);
    Rng rng(23);
    auto phi_of = [&](const Tensor& x) {
        ad::Graph g;
        const auto pn = bind(g, p, false);
        return g.value(model::extract_features(g, pn, g.constant(x)));
    };
    for (int rep = 0; rep < 1000; ++rep) {
        const Tensor a = random_tensor(3, 1, rng, -3.0, 3.0);
        const Tensor b = random_tensor(3, 1, rng, -3.0, 3.0);
        const Tensor fa = phi_of(a), fb = phi_of(b);
        double dx = 0.0, df = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) dx += (a[i] - b[i]) * (a[i] - b[i]);
        for (std::size_t i = 0; i < fa.size(); ++i) df += (fa[i] - fb[i]) * (fa[i] - fb[i]);
        CHECK(std::sqrt(df) <= L * std::sqrt(dx) * (1.0 + 1e-9) + 1e-12);
    }
}

TEST_CASE("dynamics output norm stays below the final-layer bound") {
    const auto dims = small_dims();
    const model::ModelParams p = model::ModelParams::init(dims, 29);
    // |l2| <= sqrt(hidden) after tanh, so ||f|| <= sigma(W3) sqrt(hidden) + ||b3||
    double b3 = 0.0;
    for (std::size_t i = 0; i < p.f_b3.size(); ++i) b3 += p.f_b3[i] * p.f_b3[i];
    const double cap = model::spectral_norm(p.f_w3) * std::sqrt(double(dims.hidden)) +
                       std::sqrt(b3);
    Rng rng(31);
    for (int rep = 0; rep < 200; ++rep) {
        ad::Graph g;
        const auto pn = bind(g, p, false);
        const auto f = model::dynamics(g, pn, rng.uniform01(),
                                       g.constant(random_tensor(4, 1, rng, -5.0, 5.0)),
                                       g.constant(random_tensor(4, 1, rng, -5.0, 5.0)));
        double norm = 0.0;
        for (const double v : g.view(f)) norm += v * v;
        CHECK(std::sqrt(norm) <= cap * (1.0 + 1e-9));
    }
}

TEST_CASE("checkpoint JSON round-trips bit-exactly") {
    const auto dims = small_dims();
    const model::ModelParams p = model::ModelParams::init(dims, 37);
    const std::string path = "/tmp/fxtsnet_test_checkpoint.json";
    model::save_checkpoint(path, p);
    const model::ModelParams q = model::load_checkpoint(path);
    CHECK(q.dims.d_x == p.dims.d_x);
    CHECK(q.seed == p.seed);
    const auto ta = model::param_tensors(p);
    const auto tb = model::param_tensors(q);
    for (std::size_t i = 0; i < ta.size(); ++i) {
        REQUIRE(ta[i]->size() == tb[i]->size());
        for (std::size_t j = 0; j < ta[i]->size(); ++j)
            CHECK((*ta[i])[j] == (*tb[i])[j]);  // shortest round-trip keeps all bits
    }
    std::remove(path.c_str());
    CHECK_THROWS_AS(model::load_checkpoint("/tmp/does_not_exist_fxtsnet.json"),
                    std::runtime_error);
}

TEST_CASE("init is deterministic per seed and shapes are consistent") {
    const auto dims = small_dims();
    const model::ModelParams a = model::ModelParams::init(dims, 5);
    const model::ModelParams b = model::ModelParams::init(dims, 5);
    const model::ModelParams c = model::ModelParams::init(dims, 6);
    const auto ta = model::param_tensors(a), tb = model::param_tensors(b),
               tc = model::param_tensors(c);
    bool any_diff = false;
    for (std::size_t i = 0; i < ta.size(); ++i)
        for (std::size_t j = 0; j < ta[i]->size(); ++j) {
            CHECK((*ta[i])[j] == (*tb[i])[j]);
            any_diff = any_diff || (*ta[i])[j] != (*tc[i])[j];
        }
    CHECK(any_diff);
    CHECK(a.f_w1.cols() == std::size_t(dims.d_h + dims.d_c + 1));
    model::Dims bad = dims;
    bad.d_h = 1;
    CHECK_THROWS_AS(model::ModelParams::init(bad, 0), std::invalid_argument);
}
