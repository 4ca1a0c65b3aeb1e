#include <doctest.h>

#include <cmath>
#include <vector>

#include "nsfde/dl.hpp"
#include "nsfde/errors.hpp"

using namespace nsfde;

namespace {

std::vector<Segment> singleton(double level) {
    return {Segment::constant(0.05, 100, level)};
}

}  // namespace

TEST_CASE("identical samples have distance exactly zero") {
    const auto a = singleton(0.7);
    CHECK(empirical_dl(a, a, 0.25, 500, 42) == 0.0);

    std::vector<Segment> many;
    for (int i = 0; i < 10; ++i) many.push_back(Segment::constant(0.05, 100, 0.1 * i));
    CHECK(empirical_dl(many, many, 0.25, 500, 42) == 0.0);
}

TEST_CASE("point-mass calibration against the dual optimum") {
    // Point masses at sup-distance delta have d_L = min(delta, 2); the
    // optimal test function is a clipped coordinate functional.
    const int family = 1000;
    CHECK(empirical_dl(singleton(0.0), singleton(0.5), 0.25, family, 7) ==
          doctest::Approx(0.5).epsilon(0.1));
    CHECK(empirical_dl(singleton(0.0), singleton(1.0), 0.25, family, 7) ==
          doctest::Approx(1.0).epsilon(0.05));
    CHECK(empirical_dl(singleton(0.0), singleton(5.0), 0.25, family, 7) ==
          doctest::Approx(2.0).epsilon(0.025));
}

TEST_CASE("estimator is symmetric and bounded") {
    const auto a = singleton(0.0);
    const auto b = singleton(1.3);
    const double ab = empirical_dl(a, b, 0.25, 800, 3);
    const double ba = empirical_dl(b, a, 0.25, 800, 3);
    CHECK(ab == ba);
    CHECK(ab >= 0.0);
    CHECK(ab <= 2.0);
}

TEST_CASE("nested families are monotone in the family size") {
    const auto a = singleton(0.0);
    const auto b = singleton(0.8);
    double prev = 0.0;
    for (int family : {10, 50, 200, 1000}) {
        const double est = empirical_dl(a, b, 0.25, family, 99);
        CHECK(est >= prev);
        prev = est;
    }
    CHECK(prev == doctest::Approx(0.8).epsilon(0.05));
}

TEST_CASE("estimate converges toward the point-mass distance") {
    const auto a = singleton(0.0);
    const auto b = singleton(0.5);
    CHECK(std::abs(empirical_dl(a, b, 0.25, 1000, 11) - 0.5) < 0.05);
}

TEST_CASE("shape mismatches are rejected") {
    const auto a = singleton(0.0);
    std::vector<Segment> wrong = {Segment::constant(0.05, 50, 0.0)};
    CHECK_THROWS_AS(empirical_dl(a, wrong, 0.25, 10, 1), ShapeMismatchError);
    CHECK_THROWS_AS(empirical_dl(a, std::vector<Segment>{}, 0.25, 10, 1), RangeError);
}

TEST_CASE("split-half floor vanishes for identical members and grows with spread") {
    std::vector<Segment> tight, spread;
    for (int i = 0; i < 64; ++i) {
        tight.push_back(Segment::constant(0.05, 100, 1.0));
        spread.push_back(Segment::constant(0.05, 100, (i % 2 == 0) ? 0.0 : 1.0));
    }
    CHECK(split_half_floor(tight, 0.25, 400, 5) == 0.0);
    const double noisy = split_half_floor(spread, 0.25, 400, 5);
    CHECK(noisy > 0.0);
    CHECK(noisy < 0.5);
}
