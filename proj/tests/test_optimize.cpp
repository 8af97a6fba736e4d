#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "bdtp/errors.hpp"
#include "bdtp/optimize.hpp"
#include "bdtp/oracle_mc.hpp"
#include "bdtp/policy.hpp"
#include "bdtp/value_pmf.hpp"

using namespace bdtp;

namespace {

const RewardModel kCoin = make_reward_model(Family::PlusHeavy, 1);

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

TEST_CASE("gradient projection removes the capacity component") {
    SUBCASE("hand examples") {
        const auto p1 = project_gradient({1.0, 0.0}, {1.0, 1.0});
        CHECK(p1[0] == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(p1[1] == doctest::Approx(-0.5).epsilon(1e-15));

        const auto p2 = project_gradient({1.0, 0.0}, {2.0, 1.0});
        CHECK(p2[0] == doctest::Approx(0.2).epsilon(1e-14));
        CHECK(p2[1] == doctest::Approx(-0.4).epsilon(1e-14));
    }
    SUBCASE("orthogonality for arbitrary vectors") {
        SplitMix64 rng(7);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<double> g(6), w(6);
            for (auto& v : g) v = rng.uniform01() * 4.0 - 2.0;
            for (auto& v : w) v = rng.uniform01() * 9.0 + 0.5;
            const auto proj = project_gradient(g, w);
            CHECK(std::abs(dot(proj, w)) <= 1e-10 * dot(w, w));
        }
    }
    SUBCASE("bad input") {
        CHECK_THROWS_AS(project_gradient({1.0}, {1.0, 2.0}), std::invalid_argument);
        CHECK_THROWS_AS(project_gradient({1.0}, {0.0}), std::invalid_argument);
    }
}

TEST_CASE("clip_and_reproject restores feasibility") {
    SUBCASE("already feasible: returned unchanged") {
        const std::vector<double> q{0.5, 1.0, 1.0};
        const auto out = clip_and_reproject(q, 2, 10.0);
        REQUIRE(out.size() == q.size());
        for (size_t i = 0; i < q.size(); ++i) CHECK(out[i] == q[i]);
    }
    SUBCASE("box violations clip and the freed budget lands on w") {
        const auto out = clip_and_reproject({1.2, 0.9, -0.1}, 2, 12.0);
        REQUIRE(out.size() == 3);
        CHECK(out[0] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(out[1] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(out[2] == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("capacity-preserving perturbations of a feasible point end feasible") {
        // ascent steps move along project_gradient directions, so the points
        // reaching clip_and_reproject sit on the capacity plane with small box
        // violations; feed it exactly that population
        SplitMix64 rng(11);
        const std::vector<double> w{32, 16, 8, 4, 2};
        const std::vector<double> base{0.0, 0.0, 0.5, 1.0, 1.0};  // capacity 10
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<double> g(5);
            for (auto& v : g) v = rng.uniform01() * 2.0 - 1.0;
            const double eta = 0.02 + 0.28 * rng.uniform01();
            const auto step = project_gradient(g, w);
            std::vector<double> q = base;
            for (size_t i = 0; i < q.size(); ++i) q[i] += eta * step[i];
            const auto out = clip_and_reproject(q, 2, 10.0);
            for (double v : out) {
                CHECK(v >= -1e-12);
                CHECK(v <= 1.0 + 1e-12);
            }
            CHECK(std::abs(dot(w, out) - 10.0) <= 1e-8);
        }
    }
    SUBCASE("capacity beyond the whole tree cannot be restored") {
        CHECK_THROWS_AS(clip_and_reproject({1.0, 1.0}, 2, 7.0), ConvergenceError);
    }
}

TEST_CASE("homogeneous_value wires the constructed policy into the recursion") {
    const auto [policy, budget] = homogeneous_policy(2, 10.0);
    CHECK(homogeneous_value(kCoin, 2, 10.0) ==
          tree_value_selective(kCoin, policy.b, policy.d, policy.q));
    CHECK(homogeneous_value(kCoin, 1, 10.0) == 0.0);
    (void)budget;
}

TEST_CASE("ascent at full capacity stays at the all-ones corner") {
    GradientConfig config;
    config.max_iterations = 50;
    const std::vector<double> ones(3, 1.0);
    const OptimizationResult r = optimize_q(kCoin, 2, 3, 14.0, config, ones);
    CHECK(r.converged);
    CHECK(r.iterations_used <= 2);
    CHECK(r.value == doctest::Approx(tree_value_exhaustive(kCoin, 2, 3)).epsilon(1e-12));
    for (double v : r.q_star) CHECK(v == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("ascent finds the constrained optimum of a 2-level tree") {
    // d=2, b=2, C=3: the feasible set is the segment 4*q0 + 2*q1 = 3.
    const RewardModel model = make_reward_model(Family::PlusHeavy, 2);
    double grid_best = -1e300;
    for (int i = 0; i <= 1000; ++i) {
        const double q1 = static_cast<double>(i) / 1000.0;
        const double q0 = (3.0 - 2.0 * q1) / 4.0;
        grid_best = std::max(grid_best, tree_value_selective(model, 2, 2, {q0, q1}));
    }
    GradientConfig config;
    config.learning_rate = 1e-2;
    config.max_iterations = 100000;
    const OptimizationResult r = optimize_q(model, 2, 2, 3.0, config, {0.75, 0.0});
    CHECK(r.converged);
    CHECK(r.value == doctest::Approx(grid_best).scale(1).epsilon(1e-4));
}

TEST_CASE("ascent trajectories stay feasible and never lose value") {
    const std::vector<double> w{256, 128, 64, 32, 16, 8, 4, 2};
    GradientConfig config;
    config.max_iterations = 3000;
    double last_value = -1e300;
    long long calls = 0;
    const AscentObserver observer = [&](long long iteration, const std::vector<double>& q, double value) {
        for (double v : q) {
            CHECK(v >= -1e-12);
            CHECK(v <= 1.0 + 1e-12);
        }
        CHECK(std::abs(dot(w, q) - 20.0) <= 1e-8);
        CHECK(value >= last_value);
        last_value = value;
        ++calls;
        (void)iteration;
    };
    const Policy start = random_policy(2, 8, 20.0);
    optimize_q(kCoin, 2, 8, 20.0, config, start.q, observer);
    CHECK(calls >= 2);
}

TEST_CASE("ascent is deterministic") {
    GradientConfig config;
    config.max_iterations = 500;
    const Policy start = random_policy(2, 6, 9.0);
    const OptimizationResult a = optimize_q(kCoin, 2, 6, 9.0, config, start.q);
    const OptimizationResult b = optimize_q(kCoin, 2, 6, 9.0, config, start.q);
    CHECK(a.value == b.value);
    CHECK(a.iterations_used == b.iterations_used);
    REQUIRE(a.q_star.size() == b.q_star.size());
    for (size_t i = 0; i < a.q_star.size(); ++i) CHECK(a.q_star[i] == b.q_star[i]);
}

TEST_CASE("different feasible starts meet at the same value") {
    const long long d = heterogeneous_depth(2, 10.0);  // 9
    GradientConfig config;
    config.max_iterations = 200000;
    config.value_tolerance = 1e-10;

    std::vector<std::vector<double>> starts;
    const auto [hom, budget] = homogeneous_policy(2, 10.0);
    std::vector<double> padded(static_cast<size_t>(d), 0.0);
    std::copy(hom.q.begin(), hom.q.end(), padded.begin() + (d - hom.d));
    starts.push_back(padded);
    starts.push_back(random_policy(2, d, 10.0).q);
    SplitMix64 rng(23);
    std::vector<double> scattered(static_cast<size_t>(d));
    for (auto& v : scattered) v = rng.uniform01();
    starts.push_back(clip_and_reproject(scattered, 2, 10.0));

    std::vector<double> finals;
    for (const auto& q0 : starts) {
        const OptimizationResult r = optimize_q(kCoin, 2, d, 10.0, config, q0);
        CHECK(r.converged);
        finals.push_back(r.value);
    }
    for (double v : finals) CHECK(v == doctest::Approx(finals[0]).scale(1).epsilon(1e-6));
    (void)budget;
}

TEST_CASE("optimize_q validates its start") {
    GradientConfig config;
    CHECK_THROWS_AS(optimize_q(kCoin, 2, 3, 10.0, config, {1.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(optimize_q(kCoin, 2, 2, 3.0, config, {1.5, -0.75}), std::invalid_argument);
    CHECK_THROWS_AS(optimize_q(kCoin, 2, 2, 3.0, config, {0.5, 0.0}), std::invalid_argument);
}

TEST_CASE("homogeneous grid search prefers b=2 for the fair coin") {
    const OptimizationResult r = optimize_homogeneous(kCoin, 10.0, 20);
    CHECK(r.b_star == 2);
    CHECK(r.value == homogeneous_value(kCoin, 2, 10.0));
    CHECK(r.q_star == homogeneous_policy(2, 10.0).first.q);
    CHECK(r.converged);

    SUBCASE("enlarging b_max past the argmax changes nothing") {
        const OptimizationResult wider = optimize_homogeneous(kCoin, 10.0, 9);
        CHECK(wider.b_star == r.b_star);
        CHECK(wider.value == r.value);
    }
    SUBCASE("b_max below 2 rejected") {
        CHECK_THROWS_AS(optimize_homogeneous(kCoin, 10.0, 1), std::invalid_argument);
    }
}

TEST_CASE("heterogeneous search improves on the homogeneous policy") {
    GradientConfig config;
    config.max_iterations = 2000;
    const OptimizationResult r = optimize_heterogeneous(kCoin, 10.0, 2, config);
    CHECK(r.b_star == 2);
    REQUIRE(r.q_star.size() == 9);
    CHECK(r.value >= homogeneous_value(kCoin, 2, 10.0));
    CHECK(std::abs(capacity_of(2, r.q_star) - 10.0) <= 1e-6);
    for (double v : r.q_star) {
        CHECK(v >= -1e-12);
        CHECK(v <= 1.0 + 1e-12);
    }
}
