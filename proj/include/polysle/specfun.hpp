#pragma once

namespace polysle {

// Gamma function, Lanczos approximation (g=7, 9 terms), relative error
// below 1e-12 on the real range used here; negative non-integer arguments
// via the reflection formula.
double gamma_fn(double x);

// Gauss hypergeometric 2F1(a, b; c; s) for 0 <= s < 1 by direct series,
// switching to the 1-s linear transformation for s > 1/2 when c-a-b is not
// close to an integer (series fallback otherwise).
double hyp2f1(double a, double b, double c, double s);

} // namespace polysle
