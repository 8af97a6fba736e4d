#pragma once

#include <Eigen/Core>
#include <boost/multiprecision/eigen.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "bdtp/reward_model.hpp"

// Diffusion-maximization engine.
//
// The distribution of the best root-to-leaf accumulated reward J_d of a
// (b, d) tree is built by alternating two steps per level:
//
//   diffusion     Q_d = R + J_{d-1}   (convolve with one node's reward draw)
//   maximization  J_d = max of b independent copies of Q_d   (CDF powers)
//
// All distributions live on the integer lattice {k * unit}; the engine is
// templated on the scalar so the same code runs in double precision and,
// for small depths, in exact rational arithmetic.

namespace bdtp {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

enum class PmfKind { StateValue, ActionValue };  // J_d vs Q_d

template <typename Scalar>
struct ValuePmfT {
    RewardModel model;
    long long depth = 0;
    PmfKind kind = PmfKind::StateValue;
    long long min_index = 0;  // value at slot i is (min_index + i) * model.unit
    VectorX<Scalar> mass;

    long long max_index() const { return min_index + static_cast<long long>(mass.size()) - 1; }
};

using ValuePmf = ValuePmfT<double>;

template <typename Scalar>
inline Scalar scalar_cast(const Rational& r) {
    return r.template convert_to<Scalar>();
}
template <>
inline Rational scalar_cast<Rational>(const Rational& r) {
    return r;
}

// x^e for integer e >= 0 by squaring; fixes the multiplication order so
// repeated runs (and the exhaustive/selective shared path) are bit-stable.
template <typename Scalar>
inline Scalar ipow(Scalar x, long long e) {
    Scalar r(1);
    while (e > 0) {
        if (e & 1) r *= x;
        x *= x;
        e >>= 1;
    }
    return r;
}

namespace detail {

template <typename Scalar>
inline void check_probability(const Scalar& q, const char* what) {
    if (q < Scalar(0) || q > Scalar(1))
        throw std::invalid_argument(std::string(what) + ": probability outside [0,1]");
}

// Drops exact-zero slots at both ends (keeps at least one slot).
template <typename Scalar>
inline void trim_support(ValuePmfT<Scalar>& pmf) {
    const auto len = pmf.mass.size();
    Eigen::Index lo = 0, hi = len - 1;
    while (lo < hi && pmf.mass[lo] == Scalar(0)) ++lo;
    while (hi > lo && pmf.mass[hi] == Scalar(0)) --hi;
    if (lo != 0 || hi != len - 1) {
        pmf.mass = VectorX<Scalar>(pmf.mass.segment(lo, hi - lo + 1));
        pmf.min_index += lo;
    }
}

}  // namespace detail

// Point mass at accumulated reward 0: the depth-0 initial condition J_0.
template <typename Scalar>
inline ValuePmfT<Scalar> point_mass_zero(const RewardModel& model) {
    ValuePmfT<Scalar> pmf;
    pmf.model = model;
    pmf.depth = 0;
    pmf.kind = PmfKind::StateValue;
    pmf.min_index = 0;
    pmf.mass = VectorX<Scalar>::Constant(1, Scalar(1));
    return pmf;
}

// Diffusion: convolves J_{d-1} with one node's reward draw at sampling
// probability q.  The node contributes +up_shift with probability q*p,
// -down_shift with probability q*(1-p) and 0 with probability 1-q.
template <typename Scalar>
inline ValuePmfT<Scalar> diffusion_step(const ValuePmfT<Scalar>& j_pmf, const Scalar& q_level) {
    if (j_pmf.kind != PmfKind::StateValue)
        throw std::invalid_argument("diffusion_step: input must be a state-value (J) PMF");
    detail::check_probability(q_level, "diffusion_step");

    const long long up = j_pmf.model.up_shift;
    const long long down = j_pmf.model.down_shift;
    const Scalar p = scalar_cast<Scalar>(j_pmf.model.p_plus);
    const Scalar w_up = q_level * p;
    const Scalar w_down = q_level * (Scalar(1) - p);
    const Scalar w_stay = Scalar(1) - q_level;

    const Eigen::Index len = j_pmf.mass.size();
    const Eigen::Index out_len = len + static_cast<Eigen::Index>(up + down);
    ValuePmfT<Scalar> out;
    out.model = j_pmf.model;
    out.depth = j_pmf.depth + 1;
    out.kind = PmfKind::ActionValue;
    out.min_index = j_pmf.min_index - down;
    out.mass = VectorX<Scalar>::Zero(out_len);

    auto in = [&](Eigen::Index i) -> Scalar {
        return (i >= 0 && i < len) ? j_pmf.mass[i] : Scalar(0);
    };
    for (Eigen::Index t = 0; t < out_len; ++t)
        out.mass[t] = w_up * in(t - down - up) + w_stay * in(t - down) + w_down * in(t);

    detail::trim_support(out);
    return out;
}

// Maximization: distribution of the maximum of b independent copies,
// P(J = k) = F(k)^b - F(k - unit)^b.  The CDF is accumulated left-to-right
// from the most negative state and powered by squaring, so the summation
// order is pinned.
template <typename Scalar>
inline ValuePmfT<Scalar> maximization_step(const ValuePmfT<Scalar>& q_pmf, long long b) {
    if (q_pmf.kind != PmfKind::ActionValue)
        throw std::invalid_argument("maximization_step: input must be an action-value (Q) PMF");
    if (b < 1) throw std::invalid_argument("maximization_step: b must be >= 1");

    ValuePmfT<Scalar> out = q_pmf;
    out.kind = PmfKind::StateValue;
    if (b == 1) return out;  // max of a single copy: mass unchanged bit-for-bit

    const Eigen::Index len = q_pmf.mass.size();
    Scalar cdf(0);
    Scalar prev_pow(0);
    for (Eigen::Index i = 0; i < len; ++i) {
        cdf += q_pmf.mass[i];
        Scalar cur_pow = ipow<Scalar>(cdf, b);
        Scalar m = cur_pow - prev_pow;
        if (m < Scalar(0)) m = Scalar(0);  // cancellation guard; CDF powers are nondecreasing
        out.mass[i] = m;
        prev_pow = cur_pow;
    }
    detail::trim_support(out);
    return out;
}

// J_1 for a depth-1 tree with b branches, each leaf sampled independently
// with probability q1.  Shares the inductive code path: one diffusion from
// the point mass followed by one maximization.
template <typename Scalar>
inline ValuePmfT<Scalar> depth_one_pmf(const RewardModel& model, long long b, const Scalar& q1) {
    if (b < 1) throw std::invalid_argument("depth_one_pmf: b must be >= 1");
    return maximization_step(diffusion_step(point_mass_zero<Scalar>(model), q1), b);
}

template <typename Scalar>
inline Scalar total_mass(const ValuePmfT<Scalar>& pmf) {
    Scalar s(0);
    for (Eigen::Index i = 0; i < pmf.mass.size(); ++i) s += pmf.mass[i];
    return s;
}

// Divides the mass by its sum; used every level on deep recursions to stop
// rounding drift from accumulating.
template <typename Scalar>
inline void renormalize(ValuePmfT<Scalar>& pmf) {
    const Scalar s = total_mass(pmf);
    if (s == Scalar(0)) throw std::invalid_argument("renormalize: zero total mass");
    for (Eigen::Index i = 0; i < pmf.mass.size(); ++i) pmf.mass[i] /= s;
}

// E[value] = sum_k (k * unit) * P(k), accumulated left-to-right.
template <typename Scalar>
inline Scalar pmf_mean(const ValuePmfT<Scalar>& pmf) {
    Scalar acc(0);
    for (Eigen::Index i = 0; i < pmf.mass.size(); ++i)
        acc += Scalar(pmf.min_index + static_cast<long long>(i)) * pmf.mass[i];
    return acc * scalar_cast<Scalar>(pmf.model.unit);
}

inline constexpr long long kDefaultRenormalizeDepth = 50;

// PMF of J_d under per-level sampling probabilities q.
// q is reverse-indexed: q[0] is the deepest level d, q[d-1] the level below
// the root.  Recursion step t therefore consumes q[t-1].
template <typename Scalar>
inline ValuePmfT<Scalar> selective_pmf(const RewardModel& model, long long b, long long d,
                                       const std::vector<Scalar>& q,
                                       long long renormalize_depth_threshold = kDefaultRenormalizeDepth) {
    if (b < 1) throw std::invalid_argument("selective_pmf: b must be >= 1");
    if (d < 1) throw std::invalid_argument("selective_pmf: d must be >= 1");
    if (static_cast<long long>(q.size()) != d)
        throw std::invalid_argument("selective_pmf: q must have length d = " + std::to_string(d));
    for (const Scalar& qi : q) detail::check_probability(qi, "selective_pmf");

    const bool renorm = d > renormalize_depth_threshold;
    ValuePmfT<Scalar> pmf = point_mass_zero<Scalar>(model);
    for (long long t = 1; t <= d; ++t) {
        pmf = maximization_step(diffusion_step(pmf, q[static_cast<size_t>(t - 1)]), b);
        if (renorm) renormalize(pmf);
    }
    return pmf;
}

template <typename Scalar>
inline ValuePmfT<Scalar> exhaustive_pmf(const RewardModel& model, long long b, long long d,
                                        long long renormalize_depth_threshold = kDefaultRenormalizeDepth) {
    return selective_pmf<Scalar>(model, b, d, std::vector<Scalar>(static_cast<size_t>(d), Scalar(1)),
                                 renormalize_depth_threshold);
}

// V_{d,b,q} = E[J_d] for a selective allocation.
inline double tree_value_selective(const RewardModel& model, long long b, long long d,
                                   const std::vector<double>& q,
                                   long long renormalize_depth_threshold = kDefaultRenormalizeDepth) {
    return pmf_mean(selective_pmf<double>(model, b, d, q, renormalize_depth_threshold));
}

// V_{d,b} = E[J_d] for the exhaustive allocation (all q = 1): shares the
// selective code path bit-for-bit.
inline double tree_value_exhaustive(const RewardModel& model, long long b, long long d,
                                    long long renormalize_depth_threshold = kDefaultRenormalizeDepth) {
    return tree_value_selective(model, b, d, std::vector<double>(static_cast<size_t>(d), 1.0),
                                renormalize_depth_threshold);
}

// P(J_d = d): probability the best path consists of positive rewards only,
// by the scalar recursion P_t = 1 - (1 - p * P_{t-1})^b with P_0 = 1.
inline double full_reward_probability(double p, long long b, long long d) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("full_reward_probability: p outside [0,1]");
    if (b < 1) throw std::invalid_argument("full_reward_probability: b must be >= 1");
    if (d < 1) throw std::invalid_argument("full_reward_probability: d must be >= 1");
    double prob = 1.0;
    for (long long t = 1; t <= d; ++t) prob = 1.0 - ipow(1.0 - p * prob, b);
    return prob;
}

// Large-d limit of P(J_d = d): the nonzero root of 1 - P = (1 - p P)^b when
// p*b > 1, else 0.  Bisection with the bracket invariant g(lo) >= 0 >= g(hi)
// for g(P) = 1 - P - (1 - p P)^b, which rises from g(0) = 0 and crosses zero
// once more at the sought root.
inline double asymptotic_full_reward_prob(double p, long long b) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("asymptotic_full_reward_prob: p outside [0,1]");
    if (b < 1) throw std::invalid_argument("asymptotic_full_reward_prob: b must be >= 1");
    if (p * static_cast<double>(b) <= 1.0) return 0.0;
    auto g = [&](double x) { return 1.0 - x - ipow(1.0 - p * x, b); };
    double lo = 0.0, hi = 1.0;
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        if (g(mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

// Number of distinct lattice states reachable in s reward draws:
// (s+1)(s+2)/2 below the first wrap (s < n), (n+1)s - n(n-1)/2 + 1 after.
inline long long distinct_state_count(long long n, long long s) {
    if (n < 1) throw std::invalid_argument("distinct_state_count: n must be >= 1");
    if (s < 0) throw std::invalid_argument("distinct_state_count: s must be >= 0");
    if (s < n) return (s + 1) * (s + 2) / 2;
    return (n + 1) * s - n * (n - 1) / 2 + 1;
}

}  // namespace bdtp
