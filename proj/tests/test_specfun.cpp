#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "polysle/specfun.hpp"

using namespace polysle;

TEST_CASE("gamma matches the library gamma to 1e-12 on the working range") {
    for (double x = 0.05; x <= 15.0; x += 0.05) {
        const double ours = gamma_fn(x);
        const double ref = std::tgamma(x);
        CHECK(std::abs(ours - ref) <= 1e-12 * std::abs(ref));
    }
}

TEST_CASE("gamma known values and reflection") {
    const double sqrt_pi = std::sqrt(M_PI);
    CHECK(gamma_fn(0.5) == doctest::Approx(sqrt_pi).epsilon(1e-14));
    CHECK(gamma_fn(1.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(gamma_fn(5.0) == doctest::Approx(24.0).epsilon(1e-14));
    CHECK(gamma_fn(-0.5) == doctest::Approx(-2.0 * sqrt_pi).epsilon(1e-13));
    CHECK(gamma_fn(-1.5) == doctest::Approx(4.0 / 3.0 * sqrt_pi).epsilon(1e-13));
    for (double x = -0.95; x > -4.0; x -= 0.1) {
        if (std::abs(x - std::round(x)) < 0.05) continue;
        CHECK(gamma_fn(x) == doctest::Approx(std::tgamma(x)).epsilon(1e-11));
    }
}

TEST_CASE("hyp2f1 at s = 0 is 1") {
    CHECK(hyp2f1(0.3, 1.7, 2.2, 0.0) == 1.0);
    CHECK(hyp2f1(2.0, 5.0, 0.5, 0.0) == 1.0);
}

TEST_CASE("hyp2f1 arcsine identity, including the transformed region") {
    // F(1/2, 1/2; 3/2; s) = arcsin(sqrt(s)) / sqrt(s)
    for (double s : {0.1, 0.3, 0.5, 0.6, 0.75, 0.9, 0.97}) {
        const double expected = std::asin(std::sqrt(s)) / std::sqrt(s);
        CHECK(hyp2f1(0.5, 0.5, 1.5, s) == doctest::Approx(expected).epsilon(1e-10));
    }
    CHECK(hyp2f1(0.5, 0.5, 1.5, 0.75) ==
          doctest::Approx(2.0 * M_PI / (3.0 * std::sqrt(3.0))).epsilon(1e-10));
}

TEST_CASE("hyp2f1 logarithm identity") {
    // F(1, 1; 2; s) = -log(1-s)/s
    CHECK(hyp2f1(1.0, 1.0, 2.0, 0.5) == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
    for (double s : {0.05, 0.2, 0.45})
        CHECK(hyp2f1(1.0, 1.0, 2.0, s) == doctest::Approx(-std::log1p(-s) / s).epsilon(1e-12));
}

TEST_CASE("hyp2f1 Euler transformation consistency") {
    // F(a,b;c;s) = (1-s)^{c-a-b} F(c-a, c-b; c; s)
    const double grid[][3] = {{0.4, 0.7, 1.9}, {0.25, 1.2, 2.3}, {0.8, 0.3, 1.4}};
    for (const auto& abc : grid) {
        for (double s : {0.05, 0.2, 0.4, 0.55, 0.7, 0.85}) {
            const double lhs = hyp2f1(abc[0], abc[1], abc[2], s);
            const double rhs = std::pow(1.0 - s, abc[2] - abc[0] - abc[1]) *
                               hyp2f1(abc[2] - abc[0], abc[2] - abc[1], abc[2], s);
            CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
        }
    }
}

TEST_CASE("hyp2f1 rejects out-of-range arguments") {
    CHECK_THROWS(hyp2f1(0.5, 0.5, 1.5, 1.0));
    CHECK_THROWS(hyp2f1(0.5, 0.5, 1.5, -0.1));
    CHECK_THROWS(hyp2f1(0.5, 0.5, 0.0, 0.3));
    CHECK_THROWS(hyp2f1(0.5, 0.5, -2.0, 0.3));
}
