#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bdtp/reward_model.hpp"

using namespace bdtp;

TEST_CASE("family parameters match their closed forms") {
    SUBCASE("PlusHeavy n=1: the symmetric coin") {
        const RewardModel m = make_reward_model(Family::PlusHeavy, 1);
        CHECK(m.p_plus == Rational(1, 2));
        CHECK(m.r_minus == Rational(-1));
        CHECK(m.unit == Rational(1));
        CHECK(m.up_shift == 1);
        CHECK(m.down_shift == 1);
    }
    SUBCASE("PlusHeavy n=2: p=2/3, R-=-2") {
        const RewardModel m = make_reward_model(Family::PlusHeavy, 2);
        CHECK(m.p_plus == Rational(2, 3));
        CHECK(m.r_minus == Rational(-2));
        CHECK(m.unit == Rational(1));
    }
    SUBCASE("MinusHeavy n=2: p=1/3, R-=-1/2, unit 1/2") {
        const RewardModel m = make_reward_model(Family::MinusHeavy, 2);
        CHECK(m.p_plus == Rational(1, 3));
        CHECK(m.r_minus == Rational(-1, 2));
        CHECK(m.unit == Rational(1, 2));
        CHECK(m.up_shift == 2);
        CHECK(m.down_shift == 1);
    }
}

TEST_CASE("zero-average constraint holds exactly for every constructible model") {
    for (const Family family : {Family::PlusHeavy, Family::MinusHeavy})
        for (long long n = 1; n <= 25; ++n) {
            const RewardModel m = make_reward_model(family, n);
            CHECK(m.p_plus * m.r_plus + (Rational(1) - m.p_plus) * m.r_minus == Rational(0));
            // probabilities have denominator n+1, rewards are unit multiples
            CHECK(denominator(m.p_plus) == n + 1);
            CHECK(m.r_plus == m.unit * (m.up_shift));
            CHECK(m.r_minus == -m.unit * (m.down_shift));
        }
}

TEST_CASE("n=1 collapses both families to the same model, field by field") {
    CHECK(make_reward_model(Family::PlusHeavy, 1) == make_reward_model(Family::MinusHeavy, 1));
}

TEST_CASE("invalid n is rejected") {
    CHECK_THROWS_AS(make_reward_model(Family::PlusHeavy, 0), std::invalid_argument);
    CHECK_THROWS_AS(make_reward_model(Family::MinusHeavy, -3), std::invalid_argument);
}

TEST_CASE("zero_average_negative_reward pairs -p/(1-p) with p") {
    CHECK(zero_average_negative_reward(0.5) == doctest::Approx(-1.0).epsilon(1e-15));
    const double r = zero_average_negative_reward(0.01);
    CHECK(r == doctest::Approx(-1.0 / 99.0).epsilon(1e-15));
    CHECK(0.01 * 1.0 + 0.99 * r == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(zero_average_negative_reward(0.75) == doctest::Approx(-3.0).epsilon(1e-15));
    CHECK_THROWS_AS(zero_average_negative_reward(0.0), std::invalid_argument);
    CHECK_THROWS_AS(zero_average_negative_reward(1.0), std::invalid_argument);
    CHECK_THROWS_AS(zero_average_negative_reward(-0.2), std::invalid_argument);
}

TEST_CASE("family names round-trip") {
    CHECK(parse_family("plus") == Family::PlusHeavy);
    CHECK(parse_family("minus") == Family::MinusHeavy);
    CHECK(parse_family(family_name(Family::MinusHeavy)) == Family::MinusHeavy);
    CHECK_THROWS_AS(parse_family("bogus"), std::invalid_argument);
}
