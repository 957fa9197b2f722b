#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "polysle/geometry.hpp"

namespace polysle {

struct SimulationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SolverOptions {
    double eps_coll_factor = 10.0;  // collision tolerance = factor * sqrt(kappa * dt)
    int max_refine_depth = 24;      // step-halving depth near singular drift
    int quad_order = 12;            // Gauss nodes per SC quadrature segment
    int subdivision_limit = 200;    // SC contour subdivision guard
    bool accumulate = true;         // carry D_t and A_t (needs SC quadrature per step)
    bool sample_observable = false; // record U_t = f_t(W_t) at every grid time
};

struct DrivingState {
    double t = 0.0;
    double W = 0.0;
    std::vector<double> Z;
    double D = 0.0; // drift-correction integral, in the base-gap phase frame
    double A = 0.0; // clock kappa * int |SC'_s(W_s)|^2 ds
};

struct DrivingPath {
    PrevertexConfig cfg;
    double dt = 0.0;
    std::uint64_t seed = 0;
    double eps_coll = 0.0;
    std::vector<DrivingState> states;
    std::optional<double> sigma;    // collision time, if reached
    std::vector<double> U;          // observable samples (if requested)
    bool metric_time = false;       // states are in metric time; A is the rho-clock

    std::size_t n() const { return cfg.prevertices.size(); }
    std::size_t steps() const { return states.empty() ? 0 : states.size() - 1; }
    double end_time() const { return states.empty() ? 0.0 : states.back().t; }
    const DrivingState& at(std::size_t i) const { return states[i]; }

    // Grid index of time t (t must sit on the grid up to rounding).
    std::size_t index_of(double t) const;
    // Piecewise-linear driver value.
    double driver_at(double t) const;
};

// One explicit Euler-Maruyama update of the driver/force-point system:
//   W += sqrt(kappa) dB + sum_k rho_k / (W - Z^k) dt,
//   Z^k += 2 / (Z^k - W) dt.
// Throws SimulationError if the state is within the collision tolerance
// before stepping.
DrivingState step_driver(const DrivingState& state, const PrevertexConfig& cfg, double dt,
                         double dB, double eps_coll = 0.0);

// Integrate the system on the grid {0, dt, ..., } up to min(T, sigma),
// refining substeps (with deterministic proportional splitting of the
// Brownian increment) whenever a step would move the driver by more than
// half its distance to the nearest force point. Deterministic given seed.
DrivingPath simulate_driver(const PrevertexConfig& cfg, double T, double dt, std::uint64_t seed,
                            const SolverOptions& opt = {});

// Same integrator on caller-supplied nominal increments (refinement
// coupling studies and deterministic tests).
DrivingPath simulate_driver_increments(const PrevertexConfig& cfg, double dt,
                                       std::span<const double> dB, const SolverOptions& opt = {});

// Force-point/accumulator evolution under an injected deterministic driver
// W(t) (the SDE's diffusion is switched off).
DrivingPath simulate_with_driver(const PrevertexConfig& cfg, double T, double dt,
                                 const std::function<double(double)>& driver,
                                 const SolverOptions& opt = {});

// First grid time with min_k |W - Z^k| below the path's collision
// tolerance, scanning recorded states.
std::optional<double> collision_time(const DrivingPath& path);

// Brownian-motion-in-pullback-metric system, integrated in metric time s:
//   dW = dB / f' + drift_sign * (1 / (2 f'^2)) sum_j beta_j / (W - Z^j) ds,
//   dZ^k = 2 / (kappa f'^2 (Z^k - W)) ds,
// with f' = |SC'(W)|. The A field accumulates the rho-time clock
// t(s) = int ds / (kappa f'^2) used by rescale_to_rho_time.
DrivingPath simulate_metric_driver(const PrevertexConfig& cfg, double S, double ds,
                                   std::uint64_t seed, int drift_sign = +1,
                                   const SolverOptions& opt = {});

// Reparameterize a metric path onto the uniform rho-time grid {0, dt_out,
// ...} via its recorded clock. Throws on a non-monotone clock.
DrivingPath rescale_to_rho_time(const DrivingPath& metric_path, double dt_out);

// Drift and squared-diffusion coefficients of both systems at one state;
// the metric set is reported after the kappa f'^2 time rescaling, so equal
// coefficients express the time-change equivalence.
struct SystemCoefficients {
    double drift_W = 0.0;
    double diff2_W = 0.0;
    std::vector<double> drift_Z;
};

SystemCoefficients rho_coefficients(const PrevertexConfig& cfg, double W,
                                    std::span<const double> Z);
SystemCoefficients metric_coefficients_rescaled(const PrevertexConfig& cfg, double W,
                                                std::span<const double> Z, int drift_sign);

// The documented increment stream: dB_i = sqrt(dt) * N_i with N_i the i-th
// normal of the seeded generator.
std::vector<double> brownian_increments(std::uint64_t seed, std::size_t steps, double dt);

} // namespace polysle
