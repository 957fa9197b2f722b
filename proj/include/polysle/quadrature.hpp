#pragma once

#include <vector>

namespace polysle {

// Nodes/weights on [-1, 1].
struct QuadRule {
    std::vector<double> nodes;
    std::vector<double> weights;
    int size() const { return static_cast<int>(nodes.size()); }
};

// Gauss-Legendre rule, exact for polynomials of degree 2n-1.
QuadRule gauss_legendre(int n);

// Gauss-Jacobi rule for the weight (1-x)^alpha (1+x)^beta, alpha, beta > -1.
// The returned weights integrate f against the weight function, i.e.
//   integral f(x) (1-x)^alpha (1+x)^beta dx  ~=  sum w_i f(x_i).
QuadRule gauss_jacobi(int n, double alpha, double beta);

} // namespace polysle
