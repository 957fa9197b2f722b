#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>

#ifdef POLYSLE_HAVE_OPENMP
#include <omp.h>
#endif

namespace polysle {

struct EnsembleStats {
    std::size_t n = 0;
    double mean = 0.0;
    double se = 0.0;
    std::map<std::string, double> extra;
};

EnsembleStats stats_from_samples(std::span<const double> samples);

// Count/mean/M2 merge; associative, order-insensitive up to floating-point
// reassociation.
EnsembleStats merge_stats(const EnsembleStats& a, const EnsembleStats& b);

// First four central-moment summaries (mean, var, skew-free m3, m4) with
// standard errors, for two-sample comparisons.
struct MomentSummary {
    std::size_t n = 0;
    double m[4] = {0, 0, 0, 0};  // E[X], E[X^2], E[X^3], E[X^4] (raw moments)
    double se[4] = {0, 0, 0, 0};
};

MomentSummary raw_moments(std::span<const double> samples);

// Run fn(i) for i in [0, n). Each member must write only to its own
// preallocated slot; results are therefore independent of thread count.
// threads: 1 = serial reference, 0 = all hardware threads, k = k threads.
template <class F>
void run_indexed(std::size_t n, int threads, F&& fn) {
#ifdef POLYSLE_HAVE_OPENMP
    if (threads != 1) {
        const int want = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(want)
        for (long long i = 0; i < static_cast<long long>(n); ++i)
            fn(static_cast<std::size_t>(i));
        return;
    }
#else
    (void)threads;
#endif
    for (std::size_t i = 0; i < n; ++i) fn(i);
}

} // namespace polysle
