#pragma once

#include <complex>

namespace polysle {

using cplx = std::complex<double>;

// Powers (z - x)^e with x real, z in the closed upper half-plane, use the
// branch with arg in [0, pi]. std::log already does this except for a
// negative-zero imaginary part, which would flip arg(-1) to -pi.
inline cplx normalize_uhp(cplx z) {
    if (z.imag() == 0.0) return {z.real(), 0.0};
    return z;
}

inline cplx log_uhp(cplx z) { return std::log(normalize_uhp(z)); }

inline cplx pow_uhp(cplx z, double e) {
    if (e == 0.0) return {1.0, 0.0};
    return std::exp(e * log_uhp(z));
}

// Square root with nonnegative imaginary part (maps C \ [0,inf) into the
// open upper half-plane; positive reals go to positive reals).
inline cplx sqrt_uhp(cplx z) {
    cplx w = std::sqrt(normalize_uhp(z));
    return w.imag() < 0.0 ? -w : w;
}

} // namespace polysle
