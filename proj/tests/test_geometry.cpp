#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "polysle/geometry.hpp"
#include "polysle/rng.hpp"

using namespace polysle;

namespace {

PrevertexConfig make(std::vector<double> z, std::vector<double> b, double kappa) {
    PrevertexConfig cfg;
    cfg.prevertices = std::move(z);
    cfg.betas = std::move(b);
    cfg.kappa = kappa;
    return cfg;
}

bool mentions(const std::vector<std::string>& msgs, const std::string& needle) {
    return std::any_of(msgs.begin(), msgs.end(), [&](const std::string& m) {
        return m.find(needle) != std::string::npos;
    });
}

} // namespace

TEST_CASE("two-corner half-weight config is valid but flagged open") {
    const auto cfg = make({-1.0, 1.0}, {0.5, 0.5}, 4.0);
    const auto rep = validate_config(cfg);
    CHECK(rep.ok);
    CHECK(mentions(rep.warnings, "open polygon"));
    CHECK_FALSE(mentions(rep.warnings, "non-planar"));
}

TEST_CASE("configuration with no prevertex left of 0 is rejected") {
    const auto rep = validate_config(make({1.0, 2.0}, {0.5, 0.5}, 4.0));
    CHECK_FALSE(rep.ok);
    CHECK(mentions(rep.errors, "left of 0"));
}

TEST_CASE("slit-pair config is valid with a non-injectivity warning") {
    const auto rep = validate_config(make({-1.0, 1.0}, {-1.0, -1.0}, 2.0));
    CHECK(rep.ok);
    CHECK(mentions(rep.warnings, "non-planar"));
}

TEST_CASE("structural defects are errors") {
    CHECK_FALSE(validate_config(make({}, {}, 4.0)).ok);
    CHECK_FALSE(validate_config(make({-1.0, -1.0, 1.0}, {0.1, 0.1, 0.1}, 4.0)).ok); // tie
    CHECK_FALSE(validate_config(make({-1.0, 0.0, 1.0}, {0.1, 0.1, 0.1}, 4.0)).ok);  // zero
    CHECK_FALSE(validate_config(make({1.0, -1.0}, {0.1, 0.1}, 4.0)).ok); // not increasing
    CHECK_FALSE(validate_config(make({-1.0, 1.0}, {0.1}, 4.0)).ok);      // size mismatch
    CHECK_FALSE(validate_config(make({-1.0, 1.0}, {0.1, 0.1}, -1.0)).ok);
}

TEST_CASE("validate_config never mutates its argument") {
    const auto cfg = make({-1.0, 1.0}, {-1.0, 3.0}, 6.0);
    const auto copy = cfg;
    (void)validate_config(cfg);
    CHECK(cfg.prevertices == copy.prevertices);
    CHECK(cfg.betas == copy.betas);
    CHECK(cfg.kappa == copy.kappa);
}

TEST_CASE("rho/beta dictionary") {
    CHECK(rhos_from_betas({0.5, 0.5}, 4.0) == std::vector<double>{1.0, 1.0});
    CHECK(betas_from_rhos({0.0, 0.0}, 3.7) == std::vector<double>{0.0, 0.0});
    CHECK(rhos_from_betas({-1.0, -1.0}, 2.0) == std::vector<double>{-1.0, -1.0});
    CHECK_THROWS_AS(rhos_from_betas({0.5}, 0.0), ConfigError);
    CHECK_THROWS_AS(betas_from_rhos({0.5}, -2.0), ConfigError);
}

TEST_CASE("rho/beta round trip is the identity") {
    Xoshiro256pp rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        const double kappa = 0.1 + 8.0 * rng.uniform01();
        std::vector<double> betas;
        for (int k = 0; k < 5; ++k) betas.push_back(4.0 * rng.uniform01() - 2.0);
        const auto back = betas_from_rhos(rhos_from_betas(betas, kappa), kappa);
        for (std::size_t k = 0; k < betas.size(); ++k)
            CHECK(back[k] == doctest::Approx(betas[k]).epsilon(1e-15));
    }
}

TEST_CASE("exterior angle sums") {
    CHECK(exterior_angle_sum({2.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0}) == doctest::Approx(2.0));
    CHECK(exterior_angle_sum({1.0, 1.0}) == 2.0);  // infinite strip
    CHECK(exterior_angle_sum({-1.0, 3.0}) == 2.0); // slit plane
    CHECK(exterior_angle_sum({}) == 0.0);
}

TEST_CASE("exterior angle sum is permutation invariant") {
    Xoshiro256pp rng(5);
    std::vector<double> betas;
    for (int k = 0; k < 7; ++k) betas.push_back(rng.uniform01() - 0.4);
    auto shuffled = betas;
    for (std::size_t i = shuffled.size(); i > 1; --i)
        std::swap(shuffled[i - 1], shuffled[rng.next() % i]);
    CHECK(exterior_angle_sum(shuffled) == doctest::Approx(exterior_angle_sum(betas)).epsilon(1e-15));
}

TEST_CASE("corner bookkeeping") {
    Corner c;
    c.position = cplx{1.0, 2.0};
    c.beta = 0.25;
    CHECK(c.alpha() + c.beta == 1.0);
    CHECK_FALSE(c.at_infinity());
    Corner inf;
    inf.beta = 1.5;
    CHECK(inf.at_infinity());
}
