#include "polysle/ensemble.hpp"

#include <cmath>

namespace polysle {

EnsembleStats stats_from_samples(std::span<const double> samples) {
    EnsembleStats s;
    s.n = samples.size();
    if (s.n == 0) return s;
    double mean = 0.0;
    for (double v : samples) mean += v;
    mean /= static_cast<double>(s.n);
    double m2 = 0.0;
    for (double v : samples) m2 += (v - mean) * (v - mean);
    s.mean = mean;
    if (s.n > 1) {
        const double var = m2 / static_cast<double>(s.n - 1);
        s.se = std::sqrt(var / static_cast<double>(s.n));
        s.extra["sd"] = std::sqrt(var);
    }
    return s;
}

EnsembleStats merge_stats(const EnsembleStats& a, const EnsembleStats& b) {
    if (a.n == 0) return b;
    if (b.n == 0) return a;
    EnsembleStats out;
    out.n = a.n + b.n;
    const double na = static_cast<double>(a.n), nb = static_cast<double>(b.n);
    const double delta = b.mean - a.mean;
    out.mean = a.mean + delta * nb / (na + nb);
    const double sda = a.extra.count("sd") ? a.extra.at("sd") : 0.0;
    const double sdb = b.extra.count("sd") ? b.extra.at("sd") : 0.0;
    const double m2 = sda * sda * (na - 1.0) + sdb * sdb * (nb - 1.0) +
                      delta * delta * na * nb / (na + nb);
    if (out.n > 1) {
        const double var = m2 / (na + nb - 1.0);
        out.extra["sd"] = std::sqrt(var);
        out.se = std::sqrt(var / (na + nb));
    }
    return out;
}

MomentSummary raw_moments(std::span<const double> samples) {
    MomentSummary ms;
    ms.n = samples.size();
    if (ms.n == 0) return ms;
    const double n = static_cast<double>(ms.n);
    for (double v : samples) {
        double p = v;
        for (int k = 0; k < 4; ++k) {
            ms.m[k] += p;
            p *= v;
        }
    }
    for (int k = 0; k < 4; ++k) ms.m[k] /= n;
    // SE of a raw moment: sd(X^k) / sqrt(n)
    double var[4] = {0, 0, 0, 0};
    for (double v : samples) {
        double p = v;
        for (int k = 0; k < 4; ++k) {
            var[k] += (p - ms.m[k]) * (p - ms.m[k]);
            p *= v;
        }
    }
    for (int k = 0; k < 4; ++k)
        ms.se[k] = ms.n > 1 ? std::sqrt(var[k] / (n - 1.0) / n) : 0.0;
    return ms;
}

} // namespace polysle
