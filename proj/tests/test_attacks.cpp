#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "fxtsnet/attacks.hpp"
#include "fxtsnet/data.hpp"
#include "fxtsnet/train.hpp"
#include "support.hpp"

using namespace fxtsnet;

namespace {

train::TrainConfig small_config(std::uint64_t seed) {
    train::TrainConfig tc;
    tc.dims.d_x = 2;
    tc.dims.d_c = 8;
    tc.dims.d_h = 8;
    tc.dims.hidden = 16;
    tc.dims.classes = 2;
    tc.solver = {5, 1};
    tc.fxts_params = fxts::FxtsParams(10.0, 1.0, 2.0);
    tc.perturb = {0, 0.0, 8};
    tc.lambda = 0.0;
    tc.epochs = 25;
    tc.batch = 64;
    tc.seed = seed;
    return tc;
}

struct Trained {
    model::ModelParams params;
    data::Split split;
    ode::SolverConfig solver;
};

Trained train_small(std::uint64_t seed) {
    const auto ds = data::make_moons(360, 0.1, seed);
    auto split = data::split(ds, 0.75, seed);
    data::normalize_standard(split);
    const auto tc = small_config(seed);
    auto result = train::train_baseline(tc, split.train, split.test);
    return {std::move(result.params), std::move(split), tc.solver};
}

double attacked_error(const Trained& t, const std::string& kind, double eps, std::uint64_t seed) {
    Rng rng(seed);
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < t.split.test.size(); ++i) {
        const Tensor x = t.split.test.sample(i);
        const int y = t.split.test.y[i];
        Tensor xt = x;
        if (kind == "fgsm") {
            xt = attacks::fgsm(t.params, t.solver, x, y, eps, attacks::kSyntheticDomain);
        } else if (kind == "pgd") {
            attacks::AttackConfig ac;
            ac.epsilon = eps;
            ac.steps = 5;
            ac.random_start = true;
            xt = attacks::pgd(t.params, t.solver, x, y, ac, attacks::kSyntheticDomain, rng);
        }
        if (model::argmax(model::forward(xt, t.params, t.solver).logits) != y) ++wrong;
    }
    return double(wrong) / double(t.split.test.size());
}

}  // namespace

TEST_CASE("fgsm: epsilon 0 is the identity; moves are exactly 0 or epsilon") {
    const auto t = train_small(1);
    const Tensor x = t.split.test.sample(0);
    const int y = t.split.test.y[0];

    const Tensor same = attacks::fgsm(t.params, t.solver, x, y, 0.0, attacks::kSyntheticDomain);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(same[i] == x[i]);

    const double eps = 0.05;  // small enough to stay inside the domain box
    for (std::size_t s = 0; s < 10; ++s) {
        const Tensor xs = t.split.test.sample(s);
        const Tensor adv =
            attacks::fgsm(t.params, t.solver, xs, t.split.test.y[s], eps,
                          attacks::kSyntheticDomain);
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double move = std::abs(adv[i] - xs[i]);
            CHECK(move <= eps * (1 + 1e-12));
            CHECK((move == 0.0 || move == doctest::Approx(eps).epsilon(1e-12)));
        }
    }
}

TEST_CASE("pgd with steps=1, no random start, step=epsilon collapses to fgsm exactly") {
    const auto t = train_small(2);
    attacks::AttackConfig ac;
    ac.epsilon = 0.1;
    ac.steps = 1;
    ac.step_size = 0.1;
    ac.random_start = false;
    Rng rng(5);
    for (std::size_t s = 0; s < 20; ++s) {
        const Tensor x = t.split.test.sample(s);
        const int y = t.split.test.y[s];
        const Tensor a = attacks::fgsm(t.params, t.solver, x, y, 0.1, attacks::kSyntheticDomain);
        const Tensor b = attacks::pgd(t.params, t.solver, x, y, ac, attacks::kSyntheticDomain, rng);
        for (std::size_t i = 0; i < x.size(); ++i) CHECK(a[i] == b[i]);
    }
}

TEST_CASE("pgd stays inside the epsilon ball after every iteration") {
    const auto t = train_small(3);
    attacks::AttackConfig ac;
    ac.epsilon = 0.2;
    ac.steps = 8;
    ac.random_start = true;
    Rng rng(7);
    for (std::size_t s = 0; s < 10; ++s) {
        const Tensor x = t.split.test.sample(s);
        int iters = 0;
        attacks::pgd(t.params, t.solver, x, t.split.test.y[s], ac, attacks::kSyntheticDomain, rng,
                     [&](const Tensor& cur) {
                         ++iters;
                         for (std::size_t i = 0; i < x.size(); ++i) {
                             CHECK(cur[i] <= x[i] + ac.epsilon * (1 + 1e-12));
                             CHECK(cur[i] >= x[i] - ac.epsilon * (1 + 1e-12));
                             CHECK(cur[i] <= attacks::kSyntheticDomain.hi);
                             CHECK(cur[i] >= attacks::kSyntheticDomain.lo);
                         }
                     });
        CHECK(iters == ac.steps);
    }
}

TEST_CASE("attacks are deterministic given (checkpoint, x, y, cfg, seed)") {
    const auto t = train_small(4);
    const Tensor x = t.split.test.sample(0);
    const int y = t.split.test.y[0];
    attacks::AttackConfig ac;
    ac.epsilon = 0.15;
    ac.steps = 4;
    Rng r1(99), r2(99);
    const Tensor a = attacks::pgd(t.params, t.solver, x, y, ac, attacks::kSyntheticDomain, r1);
    const Tensor b = attacks::pgd(t.params, t.solver, x, y, ac, attacks::kSyntheticDomain, r2);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("corrupt: identities, impulse extremes, gaussian sample std") {
    Rng rng(11);
    const Tensor x{0.5, -0.5, 0.25, 0.0};
    const Tensor g0 = attacks::corrupt_gaussian(x, 0.0, rng);
    const Tensor i0 = attacks::corrupt_impulse(x, 0.0, attacks::kImageDomain, rng);
    for (std::size_t i = 0; i < x.size(); ++i) {
        CHECK(g0[i] == x[i]);
        CHECK(i0[i] == x[i]);
    }

    const Tensor all = attacks::corrupt_impulse(x, 1.0, attacks::kImageDomain, rng);
    for (std::size_t i = 0; i < x.size(); ++i)
        CHECK((all[i] == attacks::kImageDomain.lo || all[i] == attacks::kImageDomain.hi));

    Tensor big = Tensor::zeros(100000);
    const Tensor noisy = attacks::corrupt_gaussian(big, 0.1, rng);
    double m = 0.0;
    for (std::size_t i = 0; i < noisy.size(); ++i) m += noisy[i];
    m /= double(noisy.size());
    double var = 0.0;
    for (std::size_t i = 0; i < noisy.size(); ++i) var += (noisy[i] - m) * (noisy[i] - m);
    const double sd = std::sqrt(var / double(noisy.size()));
    CHECK(sd >= 0.097);
    CHECK(sd <= 0.103);
}

TEST_CASE("fgsm at eps=0.1 does not beat the clean error (5-seed median)") {
    std::vector<double> clean_errs, fgsm_errs;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto t = train_small(seed);
        clean_errs.push_back(attacked_error(t, "clean", 0.0, seed));
        fgsm_errs.push_back(attacked_error(t, "fgsm", 0.1, seed));
    }
    std::sort(clean_errs.begin(), clean_errs.end());
    std::sort(fgsm_errs.begin(), fgsm_errs.end());
    CHECK(fgsm_errs[2] >= clean_errs[2]);
}

TEST_CASE("fgsm error is nondecreasing in epsilon (5-seed median)") {
    const double eps_grid[] = {0.0, 0.05, 0.1, 0.2};
    std::vector<std::vector<double>> per_eps(4);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto t = train_small(seed);
        for (std::size_t e = 0; e < 4; ++e)
            per_eps[e].push_back(attacked_error(t, "fgsm", eps_grid[e], seed));
    }
    double prev = -1.0;
    for (std::size_t e = 0; e < 4; ++e) {
        std::sort(per_eps[e].begin(), per_eps[e].end());
        const double med = per_eps[e][2];
        CHECK(med >= prev);
        prev = med;
    }
}

TEST_CASE("pgd is at least as strong as fgsm on most points (loss comparison)") {
    const auto t = train_small(6);
    attacks::AttackConfig ac;
    ac.epsilon = 0.1;
    ac.steps = 10;
    ac.step_size = 0.025;
    ac.random_start = true;
    Rng rng(13);
    int pgd_wins = 0, total = 0;
    for (std::size_t s = 0; s < t.split.test.size(); ++s) {
        const Tensor x = t.split.test.sample(s);
        const int y = t.split.test.y[s];
        const Tensor xf = attacks::fgsm(t.params, t.solver, x, y, 0.1, attacks::kSyntheticDomain);
        const Tensor xp = attacks::pgd(t.params, t.solver, x, y, ac, attacks::kSyntheticDomain, rng);
        const double lf = attacks::cls_loss(t.params, t.solver, xf, y);
        const double lp = attacks::cls_loss(t.params, t.solver, xp, y);
        if (lp >= lf - 1e-12) ++pgd_wins;
        ++total;
    }
    CHECK(double(pgd_wins) / double(total) >= 0.7);
}
