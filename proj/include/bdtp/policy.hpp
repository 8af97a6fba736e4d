#pragma once

#include <utility>
#include <vector>

namespace bdtp {

// A selective allocation: sample each node of level l independently with
// probability q[d - l].  q is reverse-indexed as everywhere else in the
// library: q[0] belongs to the deepest level d, q[d-1] to level 1.
struct Policy {
    long long b = 1;        // branches considered per reached node
    long long d = 1;        // deepest level with nonzero sampling probability
    std::vector<double> q;  // length d, each entry in [0,1]
};

// Bookkeeping of the homogeneous construction: C split into fully sampled
// levels and a remainder C_r spread over level d_prime.
struct CapacityBudget {
    double C = 0.0;
    double C_r = 0.0;
    long long d_prime = 1;
};

// Average number of sampled nodes, sum_l q_{d-l+1} * b^l.  Throws
// InfeasibleError if b^l leaves double range, naming the level.
double capacity_of(long long b, const std::vector<double>& q);

// Depth-first fill: levels 1..d'-1 get q = 1, the deepest level d' absorbs
// the remainder C_r as q_1 = C_r / b^{d'}.  d' is the unique level with
// 0 < C_r <= b^{d'}; a remainder hitting b^{d'} exactly stays at the
// shallower d' with q_1 = 1.
std::pair<Policy, CapacityBudget> homogeneous_policy(long long b, double C);

// Depth cap used when optimizing free per-level probabilities:
// 2 * floor(ln C / ln b) + 3.  Undefined for b = 1 (the optimizer treats
// b = 1 analytically instead).
long long heterogeneous_depth(long long b, double C);

// Uniform baseline: every node of the depth-d tree gets the same sampling
// probability C / sum_l b^l.  Throws InfeasibleError when even q = 1
// everywhere cannot reach C.
Policy random_policy(long long b, long long d, double C);

}  // namespace bdtp
