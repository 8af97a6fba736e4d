#include "bdtp/policy.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "bdtp/errors.hpp"

namespace bdtp {

namespace {

constexpr double kPowerLimit = 1e300;  // beyond this, b^l is no longer trustworthy

void check_branching(long long b) {
    if (b < 1) throw std::invalid_argument("branching factor b must be >= 1, got " + std::to_string(b));
}

void check_probability_vector(const std::vector<double>& q) {
    for (size_t i = 0; i < q.size(); ++i)
        if (!(q[i] >= 0.0 && q[i] <= 1.0))
            throw std::invalid_argument("q[" + std::to_string(i) + "] outside [0,1]");
}

}  // namespace

double capacity_of(long long b, const std::vector<double>& q) {
    check_branching(b);
    check_probability_vector(q);
    const long long d = static_cast<long long>(q.size());
    // Walk levels from 1 (shallow) to d; level l pairs with q[d - l].
    double total = 0.0;
    double level_nodes = 1.0;
    for (long long l = 1; l <= d; ++l) {
        level_nodes *= static_cast<double>(b);
        if (level_nodes > kPowerLimit)
            throw InfeasibleError("capacity_of: b^l exceeds representable range at level " + std::to_string(l));
        total += q[static_cast<size_t>(d - l)] * level_nodes;
    }
    return total;
}

std::pair<Policy, CapacityBudget> homogeneous_policy(long long b, double C) {
    check_branching(b);
    if (!(C > 0.0)) throw std::invalid_argument("homogeneous_policy: capacity must be positive");

    // Find the first level d' whose cumulative full-tree capacity reaches C.
    double filled = 0.0;       // sum of b^l over levels l < d'
    double level_nodes = 0.0;  // b^{d'}
    long long d_prime = 0;
    for (;;) {
        ++d_prime;
        level_nodes = (d_prime == 1) ? static_cast<double>(b) : level_nodes * static_cast<double>(b);
        if (level_nodes > kPowerLimit)
            throw InfeasibleError("homogeneous_policy: b^l exceeds representable range at level " +
                                  std::to_string(d_prime));
        if (C <= filled + level_nodes) break;
        filled += level_nodes;
    }

    CapacityBudget budget;
    budget.C = C;
    budget.C_r = C - filled;  // in (0, b^{d'}]
    budget.d_prime = d_prime;

    Policy policy;
    policy.b = b;
    policy.d = d_prime;
    policy.q.assign(static_cast<size_t>(d_prime), 1.0);
    policy.q[0] = budget.C_r / level_nodes;  // deepest level takes the remainder
    return {policy, budget};
}

long long heterogeneous_depth(long long b, double C) {
    if (b < 2) throw std::invalid_argument("heterogeneous_depth: requires b >= 2");
    if (!(C >= 1.0)) throw std::invalid_argument("heterogeneous_depth: requires C >= 1");
    // floor(ln C / ln b) via the exact integer-power walk, immune to log()
    // rounding at C = b^k boundaries.
    long long k = 0;
    double power = 1.0;
    while (power * static_cast<double>(b) <= C) {
        power *= static_cast<double>(b);
        ++k;
    }
    return 2 * k + 3;
}

Policy random_policy(long long b, long long d, double C) {
    check_branching(b);
    if (d < 1) throw std::invalid_argument("random_policy: d must be >= 1");
    if (!(C > 0.0)) throw std::invalid_argument("random_policy: capacity must be positive");

    double total_nodes = 0.0;
    double level_nodes = 1.0;
    for (long long l = 1; l <= d; ++l) {
        level_nodes *= static_cast<double>(b);
        if (level_nodes > kPowerLimit)
            throw InfeasibleError("random_policy: b^l exceeds representable range at level " + std::to_string(l));
        total_nodes += level_nodes;
    }
    if (C > total_nodes)
        throw InfeasibleError("random_policy: capacity " + std::to_string(C) + " exceeds the " +
                              std::to_string(total_nodes) + " nodes of the (b=" + std::to_string(b) +
                              ", d=" + std::to_string(d) + ") tree");

    Policy policy;
    policy.b = b;
    policy.d = d;
    policy.q.assign(static_cast<size_t>(d), C / total_nodes);
    return policy;
}

}  // namespace bdtp
