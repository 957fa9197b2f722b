#include "polysle/specfun.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace polysle {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

// Lanczos g = 7, 9 coefficients.
constexpr double kLanczos[9] = {
    0.99999999999980993,      676.5203681218851,     -1259.1392167224028,
    771.32342877765313,       -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,     9.9843695780195716e-6, 1.5056327351493116e-7,
};

double gamma_positive(double x) {
    // valid for x >= 0.5
    double acc = kLanczos[0];
    for (int i = 1; i < 9; ++i) acc += kLanczos[i] / (x - 1.0 + i);
    const double t = x + 6.5;
    return std::sqrt(2.0 * kPi) * std::pow(t, x - 0.5) * std::exp(-t) * acc;
}

double gauss_series(double a, double b, double c, double s, int max_terms) {
    double term = 1.0;
    double sum = 1.0;
    int small_runs = 0;
    for (int k = 0; k < max_terms; ++k) {
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * s;
        sum += term;
        if (std::abs(term) <= 1e-16 * std::abs(sum)) {
            if (++small_runs >= 2) return sum;
        } else {
            small_runs = 0;
        }
    }
    throw std::runtime_error("hyp2f1: series did not converge");
}

} // namespace

double gamma_fn(double x) {
    if (std::isnan(x)) return x;
    if (x >= 0.5) return gamma_positive(x);
    // reflection: Gamma(x) = pi / (sin(pi x) Gamma(1 - x))
    const double s = std::sin(kPi * x);
    if (s == 0.0) return std::numeric_limits<double>::quiet_NaN(); // nonpositive integer pole
    return kPi / (s * gamma_positive(1.0 - x));
}

double hyp2f1(double a, double b, double c, double s) {
    if (!(s >= 0.0 && s < 1.0)) throw std::domain_error("hyp2f1: s must lie in [0, 1)");
    if (c <= 0.0 && c == std::floor(c))
        throw std::domain_error("hyp2f1: c must not be a nonpositive integer");
    if (s == 0.0) return 1.0;
    if (a == 0.0 || b == 0.0) return 1.0;
    if (s <= 0.5) return gauss_series(a, b, c, s, 20000);

    // 1-s linear transformation restores fast convergence; it degenerates
    // when c-a-b approaches an integer, in which case the raw series (still
    // convergent for s < 1) is used instead.
    const double d = c - a - b;
    if (std::abs(d - std::round(d)) > 0.02) {
        const double one_minus = 1.0 - s;
        const double t1 = gamma_fn(c) * gamma_fn(d) / (gamma_fn(c - a) * gamma_fn(c - b)) *
                          gauss_series(a, b, a + b - c + 1.0, one_minus, 20000);
        const double t2 = std::pow(one_minus, d) * gamma_fn(c) * gamma_fn(-d) /
                          (gamma_fn(a) * gamma_fn(b)) *
                          gauss_series(c - a, c - b, d + 1.0, one_minus, 20000);
        return t1 + t2;
    }
    return gauss_series(a, b, c, s, 2000000);
}

} // namespace polysle
