#include "polysle/quadrature.hpp"

#include <cmath>
#include <stdexcept>

#include "polysle/specfun.hpp"

namespace polysle {

namespace {

// Jacobi polynomial P_n^{(a,b)}(x) and first derivative by the three-term
// recurrence; returns {P_n, P_n'}.
struct PolyVal {
    double p;
    double dp;
};

PolyVal jacobi_poly(int n, double a, double b, double x) {
    if (n == 0) return {1.0, 0.0};
    double pm1 = 1.0;
    double p = 0.5 * (a - b + (a + b + 2.0) * x);
    for (int j = 2; j <= n; ++j) {
        const double j2ab = 2.0 * j + a + b;
        const double c1 = 2.0 * j * (j + a + b) * (j2ab - 2.0);
        const double c2 = (j2ab - 1.0) * (a * a - b * b);
        const double c3 = (j2ab - 2.0) * (j2ab - 1.0) * j2ab;
        const double c4 = 2.0 * (j + a - 1.0) * (j + b - 1.0) * j2ab;
        const double next = ((c2 + c3 * x) * p - c4 * pm1) / c1;
        pm1 = p;
        p = next;
    }
    // derivative from P_n and P_{n-1}
    const double n2ab = 2.0 * n + a + b;
    const double dp =
        (n * (a - b - n2ab * x) * p + 2.0 * (n + a) * (n + b) * pm1) / (n2ab * (1.0 - x * x));
    return {p, dp};
}

} // namespace

QuadRule gauss_jacobi(int n, double alpha, double beta) {
    if (n < 1) throw std::invalid_argument("gauss_jacobi: order must be positive");
    if (alpha <= -1.0 || beta <= -1.0)
        throw std::invalid_argument("gauss_jacobi: exponents must exceed -1");

    QuadRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);

    // Bracket the n simple roots on a Chebyshev-distributed scan grid, then
    // bisect and polish with Newton.
    const int scan = 64 * n;
    double prev_x = std::cos(M_PI * (1.0 - 0.5 / scan));
    double prev_p = jacobi_poly(n, alpha, beta, prev_x).p;
    int found = 0;
    for (int i = 1; i < scan && found < n; ++i) {
        const double x = std::cos(M_PI * (1.0 - (i + 0.5) / scan));
        const double p = jacobi_poly(n, alpha, beta, x).p;
        if ((prev_p < 0.0) != (p < 0.0)) {
            double lo = prev_x, hi = x, flo = prev_p;
            for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double fm = jacobi_poly(n, alpha, beta, mid).p;
                if ((flo < 0.0) != (fm < 0.0))
                    hi = mid;
                else {
                    lo = mid;
                    flo = fm;
                }
            }
            double root = 0.5 * (lo + hi);
            for (int it = 0; it < 4; ++it) {
                const auto pv = jacobi_poly(n, alpha, beta, root);
                const double step = pv.p / pv.dp;
                if (std::isfinite(step)) root -= step;
            }
            rule.nodes[found++] = root;
        }
        prev_x = x;
        prev_p = p;
    }
    if (found != n) throw std::runtime_error("gauss_jacobi: failed to bracket all roots");

    // w_i = M / ((1 - x_i^2) P_n'(x_i)^2),
    // M = 2^{a+b+1} Gamma(n+a+1) Gamma(n+b+1) / (n! Gamma(n+a+b+1)).
    const double M = std::pow(2.0, alpha + beta + 1.0) * gamma_fn(n + alpha + 1.0) *
                     gamma_fn(n + beta + 1.0) /
                     (gamma_fn(n + 1.0) * gamma_fn(n + alpha + beta + 1.0));
    for (int i = 0; i < n; ++i) {
        const auto pv = jacobi_poly(n, alpha, beta, rule.nodes[i]);
        rule.weights[i] = M / ((1.0 - rule.nodes[i] * rule.nodes[i]) * pv.dp * pv.dp);
    }
    return rule;
}

QuadRule gauss_legendre(int n) { return gauss_jacobi(n, 0.0, 0.0); }

} // namespace polysle
