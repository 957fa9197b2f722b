#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "polysle/complexutil.hpp"
#include "polysle/driving.hpp"

namespace polysle {

struct FlowOptions {
    double t_end = -1.0;            // default: path end
    bool want_deriv = false;        // also integrate g' (variational equation)
    int sample_stride = 1;          // record every stride-th grid time
    double eps_swallow_factor = 1.0; // swallow tolerance = factor * sqrt(4 dt)
};

struct FlowResult {
    cplx point{0.0, 0.0};
    std::vector<double> times;
    std::vector<cplx> trajectory;       // g_t(z) at recorded times
    std::vector<cplx> deriv_trajectory; // g_t'(z) if requested
    std::optional<double> swallow_time;

    cplx final_g() const { return trajectory.back(); }
    cplx final_deriv() const { return deriv_trajectory.back(); }
};

// Integrate dg/dt = 2 / (g - W_t) from g_0 = z with the driver interpolated
// piecewise-linearly from the path, adaptive substeps capping |dg| at
// 0.1 |g - W|, RK4 within substeps. Stops at swallow (|g - W| below the
// swallow tolerance) or t_end.
FlowResult flow_point(const DrivingPath& path, cplx z, const FlowOptions& opt = {});

enum class SwallowLabel { LeftFirst, RightFirst, Neither };

// Flow the boundary points -y and x (x, y > 0) and report which is
// swallowed first; Neither if the path ends before either is.
SwallowLabel swallow_order(const DrivingPath& path, double x, double y,
                           double* t_left = nullptr, double* t_right = nullptr);

// Plain-SLE streaming variant: identical stepping and increment stream as a
// path simulated with simulate_driver on an empty force-point set, without
// materializing the path. Used for large hitting-probability ensembles.
SwallowLabel swallow_order_streaming(double kappa, double x, double y, double dt, double t_max,
                                     std::uint64_t seed, double* t_decided = nullptr);

struct TraceSample {
    std::vector<double> times;
    std::vector<cplx> points;
};

// Backward composition of inverse square-root slit maps for a driver held
// constant on each grid step; emits every stride-th sample.
TraceSample compute_trace(const DrivingPath& path, int stride = 1);

} // namespace polysle
