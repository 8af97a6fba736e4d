#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <stdexcept>
#include <string>

namespace bdtp {

// Exact rational scalar used for model parameters and the exact PMF mode.
using Rational = boost::multiprecision::cpp_rational;

// The two families of binary reward distributions with exactly rational p.
//   PlusHeavy:  p = n/(n+1), rewards {+1, -n},   lattice unit 1
//   MinusHeavy: p = 1/(n+1), rewards {+1, -1/n}, lattice unit 1/n
// Both satisfy the zero-average constraint p*R+ + (1-p)*R- = 0.
enum class Family { PlusHeavy, MinusHeavy };

struct RewardModel {
    Family family = Family::PlusHeavy;
    long long n = 1;        // family parameter, n >= 1
    Rational p_plus;        // probability of drawing r_plus
    Rational r_plus;        // fixed to +1
    Rational r_minus;       // negative reward, zero-average partner of r_plus
    Rational unit;          // lattice granularity of accumulated rewards

    // Lattice shifts of one reward draw, in units of `unit`:
    // +up_shift for R+, -down_shift for R-.
    long long up_shift = 1;
    long long down_shift = 1;

    friend bool operator==(const RewardModel& a, const RewardModel& b) {
        return a.family == b.family && a.n == b.n && a.p_plus == b.p_plus &&
               a.r_plus == b.r_plus && a.r_minus == b.r_minus && a.unit == b.unit &&
               a.up_shift == b.up_shift && a.down_shift == b.down_shift;
    }
};

// Builds the reward model for a family and parameter n.
// n = 1 collapses both families to the symmetric model p = 1/2, rewards
// {+1, -1}; the result is canonicalized to the PlusHeavy tag so that the
// two n = 1 requests compare equal field-by-field.
inline RewardModel make_reward_model(Family family, long long n) {
    if (n < 1) throw std::invalid_argument("make_reward_model: n must be >= 1, got " + std::to_string(n));
    RewardModel m;
    m.family = (n == 1) ? Family::PlusHeavy : family;
    m.n = n;
    m.r_plus = 1;
    if (m.family == Family::PlusHeavy) {
        m.p_plus = Rational(n, n + 1);
        m.r_minus = -Rational(n);
        m.unit = 1;
        m.up_shift = 1;
        m.down_shift = n;
    } else {
        m.p_plus = Rational(1, n + 1);
        m.r_minus = -Rational(1, n);
        m.unit = Rational(1, n);
        m.up_shift = n;
        m.down_shift = 1;
    }
    return m;
}

// Negative reward paired with an arbitrary p under the zero-average
// constraint: R- = -p/(1-p).  Used by the Monte-Carlo oracle for p values
// outside the exact rational families.
inline double zero_average_negative_reward(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("zero_average_negative_reward: p must lie in (0,1)");
    return -p / (1.0 - p);
}

inline const char* family_name(Family f) {
    return f == Family::PlusHeavy ? "plus" : "minus";
}

inline Family parse_family(const std::string& s) {
    if (s == "plus" || s == "PlusHeavy") return Family::PlusHeavy;
    if (s == "minus" || s == "MinusHeavy") return Family::MinusHeavy;
    throw std::invalid_argument("unknown family '" + s + "' (expected 'plus' or 'minus')");
}

}  // namespace bdtp
