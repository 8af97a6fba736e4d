#include "bdtp/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "bdtp/errors.hpp"
#include "bdtp/policy.hpp"
#include "bdtp/value_pmf.hpp"

namespace bdtp {

namespace {

constexpr double kCapacityTolerance = 1e-9;

// Capacity-normal weights for a depth-d policy: level l holds b^l nodes and
// q is reverse-indexed, so w[i] = b^{d-i} (deepest first).
std::vector<double> capacity_weights(long long b, long long d) {
    std::vector<double> w(static_cast<size_t>(d));
    double power = 1.0;
    for (long long l = 1; l <= d; ++l) {
        power *= static_cast<double>(b);
        w[static_cast<size_t>(d - l)] = power;
    }
    return w;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

std::vector<double> project_gradient(const std::vector<double>& g, const std::vector<double>& w) {
    if (g.size() != w.size())
        throw std::invalid_argument("project_gradient: gradient and weight lengths differ");
    const double ww = dot(w, w);
    if (ww == 0.0) throw std::invalid_argument("project_gradient: zero weight vector");
    const double scale = dot(w, g) / ww;
    std::vector<double> out(g.size());
    for (size_t i = 0; i < g.size(); ++i) out[i] = g[i] - scale * w[i];
    return out;
}

std::vector<double> clip_and_reproject(std::vector<double> q, long long b, double C, int max_rounds) {
    if (b < 1) throw std::invalid_argument("clip_and_reproject: b must be >= 1");
    if (q.empty()) throw std::invalid_argument("clip_and_reproject: empty q");
    const long long d = static_cast<long long>(q.size());
    const std::vector<double> w = capacity_weights(b, d);

    std::vector<char> frozen(q.size(), 0);
    for (int round = 0; round < max_rounds; ++round) {
        // Box pass: move violators to the nearest bound and freeze them for
        // the rest of this call (active set).
        for (size_t i = 0; i < q.size(); ++i) {
            if (q[i] < 0.0) {
                q[i] = 0.0;
                frozen[i] = 1;
            } else if (q[i] > 1.0) {
                q[i] = 1.0;
                frozen[i] = 1;
            }
        }
        const double deficit = C - dot(w, q);
        if (std::abs(deficit) <= kCapacityTolerance) return q;

        // Capacity pass: spread the deficit over the free components along w.
        double free_ww = 0.0;
        for (size_t i = 0; i < q.size(); ++i)
            if (!frozen[i]) free_ww += w[i] * w[i];
        if (free_ww == 0.0)
            throw ConvergenceError("clip_and_reproject: no free components left; capacity " +
                                   std::to_string(C) + " infeasible for the active set");
        for (size_t i = 0; i < q.size(); ++i)
            if (!frozen[i]) q[i] += deficit * w[i] / free_ww;
    }
    throw ConvergenceError("clip_and_reproject: constraints not met after " + std::to_string(max_rounds) +
                           " rounds");
}

double homogeneous_value(const RewardModel& model, long long b, double C) {
    if (b == 1) return 0.0;  // single branch: no choice, zero-average rewards
    const auto [policy, budget] = homogeneous_policy(b, C);
    return tree_value_selective(model, policy.b, policy.d, policy.q);
}

OptimizationResult optimize_q(const RewardModel& model, long long b, long long d, double C,
                              const GradientConfig& config, const std::vector<double>& q0,
                              const AscentObserver& observer) {
    if (static_cast<long long>(q0.size()) != d)
        throw std::invalid_argument("optimize_q: q0 must have length d");
    for (double v : q0)
        if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("optimize_q: q0 outside the box");
    const std::vector<double> w = capacity_weights(b, d);
    if (std::abs(C - dot(w, q0)) > kCapacityTolerance)
        throw std::invalid_argument("optimize_q: q0 violates the capacity constraint");

    auto value_of = [&](const std::vector<double>& q) {
        return tree_value_selective(model, b, d, q, config.renormalize_depth_threshold);
    };

    std::vector<double> q = q0;
    double value = value_of(q);
    if (observer) observer(0, q, value);

    OptimizationResult result;
    result.b_star = b;
    result.converged = false;
    result.iterations_used = config.max_iterations;

    std::vector<double> g(q.size());
    std::vector<double> probe = q;
    for (long long iter = 1; iter <= config.max_iterations; ++iter) {
        // Forward finite differences; backward where a forward probe would
        // leave the box.
        for (size_t k = 0; k < q.size(); ++k) {
            probe = q;
            if (q[k] + config.fd_step <= 1.0) {
                probe[k] = q[k] + config.fd_step;
                g[k] = (value_of(probe) - value) / config.fd_step;
            } else {
                probe[k] = q[k] - config.fd_step;
                g[k] = (value - value_of(probe)) / config.fd_step;
            }
        }
        const std::vector<double> g_proj = project_gradient(g, w);
        std::vector<double> q_next = q;
        for (size_t k = 0; k < q.size(); ++k) q_next[k] += config.learning_rate * g_proj[k];
        q_next = clip_and_reproject(std::move(q_next), b, C);
        const double value_next = value_of(q_next);

        if (value_next - value < config.value_tolerance) {
            if (value_next > value) {
                q = std::move(q_next);
                value = value_next;
                if (observer) observer(iter, q, value);
            }
            result.converged = true;
            result.iterations_used = iter;
            break;
        }
        q = std::move(q_next);
        value = value_next;
        if (observer) observer(iter, q, value);
    }

    result.q_star = std::move(q);
    result.value = value;
    return result;
}

OptimizationResult optimize_homogeneous(const RewardModel& model, double C, long long b_max) {
    if (b_max < 2) throw std::invalid_argument("optimize_homogeneous: b_max must be >= 2");
    OptimizationResult best;
    bool have_best = false;
    for (long long b = 1; b <= b_max; ++b) {
        const auto [policy, budget] = homogeneous_policy(b, C);
        const double value = homogeneous_value(model, b, C);
        if (!have_best || value > best.value) {
            best.b_star = b;
            best.q_star = policy.q;
            best.value = value;
            have_best = true;
        }
    }
    best.iterations_used = 0;
    best.converged = true;
    return best;
}

OptimizationResult optimize_heterogeneous(const RewardModel& model, double C, long long b_max,
                                          const GradientConfig& config) {
    if (b_max < 2) throw std::invalid_argument("optimize_heterogeneous: b_max must be >= 2");

    // b = 1 candidate: value 0 without running the recursion.
    OptimizationResult best;
    best.b_star = 1;
    best.q_star = homogeneous_policy(1, C).first.q;
    best.value = 0.0;

    for (long long b = 2; b <= b_max; ++b) {
        const long long d = heterogeneous_depth(b, C);
        const auto [hom, budget] = homogeneous_policy(b, C);
        std::vector<double> q0(static_cast<size_t>(d), 0.0);
        // Zero-pad the homogeneous start on the deep side (q is deepest-first).
        std::copy(hom.q.begin(), hom.q.end(), q0.begin() + (d - hom.d));
        OptimizationResult r = optimize_q(model, b, d, C, config, q0);
        if (r.value > best.value) {
            r.b_star = b;
            best = std::move(r);
        }
    }
    return best;
}

}  // namespace bdtp
