// Serial vs OpenMP throughput of the two ensemble kernels (hitting-order
// Monte Carlo and the SLE(kappa,rho) driver with SC accumulators), plus a
// check that both schedules produce identical results.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#include "polysle/driving.hpp"
#include "polysle/ensemble.hpp"
#include "polysle/loewner.hpp"
#include "polysle/rng.hpp"

using namespace polysle;

namespace {

template <class F>
double time_ms(F&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

void report(const char* name, double serial_ms, double parallel_ms, bool identical) {
    std::printf("%-28s serial %8.1f ms   parallel %8.1f ms   speedup %.2fx   %s\n", name,
                serial_ms, parallel_ms, serial_ms / parallel_ms,
                identical ? "results identical" : "RESULTS DIFFER");
}

} // namespace

int main() {
    {
        const std::size_t n = 4000;
        std::vector<double> a(n), b(n);
        auto kernel = [](std::size_t i, std::vector<double>& out) {
            double t;
            swallow_order_streaming(8.0, 1.0, 3.0, 5e-4, 20.0, path_seed(42, i), &t);
            out[i] = t;
        };
        const double ts = time_ms([&] { run_indexed(n, 1, [&](std::size_t i) { kernel(i, a); }); });
        const double tp = time_ms([&] { run_indexed(n, 0, [&](std::size_t i) { kernel(i, b); }); });
        report("hitting-order MC", ts, tp, a == b);
    }
    {
        PrevertexConfig cfg;
        cfg.prevertices = {-1.0, 1.0};
        cfg.betas = {0.5, 0.5};
        cfg.kappa = 4.0;
        const std::size_t n = 400;
        std::vector<double> a(n), b(n);
        auto kernel = [&](std::size_t i, std::vector<double>& out) {
            const DrivingPath p = simulate_driver(cfg, 0.05, 1e-4, path_seed(7, i));
            out[i] = p.states.back().D + p.states.back().A;
        };
        const double ts = time_ms([&] { run_indexed(n, 1, [&](std::size_t i) { kernel(i, a); }); });
        const double tp = time_ms([&] { run_indexed(n, 0, [&](std::size_t i) { kernel(i, b); }); });
        report("driver + SC accumulators", ts, tp, a == b);
    }
    return 0;
}
