#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "polysle/driving.hpp"
#include "polysle/ensemble.hpp"
#include "polysle/specfun.hpp"

namespace polysle {

enum class TestOutcome { Pass, Fail, Inconclusive };

std::string to_string(TestOutcome o);

struct TestReport {
    std::string name;
    TestOutcome outcome = TestOutcome::Fail;
    double estimate = 0.0;
    double se = 0.0;
    double threshold = 0.0;
    std::size_t n = 0;
    double attrition = 0.0;
    nlohmann::json details;

    bool passed() const { return outcome == TestOutcome::Pass; }
    nlohmann::json to_json() const;
    std::string human_line() const;
};

// --- martingale of U_t = f_t(W_t) -----------------------------------------

struct MartingaleParams {
    double T = 0.05;
    double dt = 1e-4;
    std::size_t paths = 20000;
    std::uint64_t seed = 1;
    int threads = 0;
    double attrition_threshold = 0.2;
    double se_multiplier = 3.5;
};

TestReport martingale_test(const PrevertexConfig& cfg, const MartingaleParams& p);

// --- quadratic variation and time change ----------------------------------

struct QvResult {
    double qv = 0.0;    // sum of squared observable increments
    double A_end = 0.0; // clock at the path end
    double rel_err = 0.0;
};

// Requires a path simulated with sample_observable = true.
QvResult qv_test(const DrivingPath& path);

// Inverse of the strictly increasing clock A_t on a recorded path.
class TimeChange {
  public:
    explicit TimeChange(const DrivingPath& path);
    double tau(double a) const;     // time with A_{tau(a)} = a
    double a_end() const { return a_.back(); }
    double observable_at_clock(double a) const; // U_{tau(a)}, linear interpolation

  private:
    std::vector<double> t_;
    std::vector<double> a_;
    std::vector<double> u_;
};

struct QvParams {
    double T = 0.1;
    double dt = 1e-4;
    std::size_t paths = 100;
    std::uint64_t seed = 7;
    int threads = 0;
    double gate = 0.05;          // per-path / median gate on |qv/A - 1|
    std::size_t tc_intervals = 8; // equal clock intervals for the BM check
};

TestReport qv_suite(const PrevertexConfig& cfg, const QvParams& p);

// --- hitting probabilities --------------------------------------------------

// p = Gamma(2-4a)/(Gamma(2-2a) Gamma(1-2a)) s^{1-2a} 2F1(2a, 1-2a; 2-2a; s)
// with a = 2/kappa and s = (y/x)/(y/x + 1); valid for kappa > 4.
double hitting_probability_formula(double kappa, double x, double y);

struct HitMcParams {
    double kappa = 8.0;
    double x = 1.0;
    double y = 1.0;
    std::size_t paths = 10000;
    double t_max = 40.0;
    double dt = 1e-4;
    std::uint64_t seed = 11;
    int threads = 0;
    double undecided_threshold = 0.05;
};

TestReport hitting_probability_mc(const HitMcParams& p);

// --- rate identity of the polygon Loewner evolution -------------------------

// Relative residual between the central-difference time derivative of
// log(f_t'(g_t(w)) g_t'(w)) and the bracket
//   -2/(g-W)^2 + (2/(g-W)) sum_l beta_l/(Z^l - W)
// at grid time t with difference step h (a grid multiple).
double theorem_rate_check(const DrivingPath& path, cplx w, double t, double h);

struct RateCheckSample {
    cplx w;
    double t = 0.0;
};

TestReport theorem_rate_suite(const DrivingPath& path, const std::vector<RateCheckSample>& samples,
                              double h, double tolerance = 1e-3);

// --- metric Brownian motion equivalence ------------------------------------

struct MetricEquivalenceParams {
    double S = 0.3;            // metric-time horizon
    double ds = 1e-4;
    double t_star = 0.01;      // rho-time comparison point
    std::size_t paths = 20000;
    std::uint64_t seed = 23;
    int threads = 0;
    std::size_t coefficient_states = 100;
    double coefficient_tol = 1e-12;
    int drift_sign = +1;
    double attrition_threshold = 0.2;
};

TestReport metric_equivalence_test(const PrevertexConfig& cfg, const MetricEquivalenceParams& p);

// --- SC closed-form and geometry oracles ------------------------------------

struct ScOracleParams {
    int quad_order = 12;
    double straightness_tol = 1e-8;
    double turning_tol = 1e-6;
    std::uint64_t seed = 5;
};

TestReport sc_oracles_suite(const PrevertexConfig& cfg, const ScOracleParams& p = {});

} // namespace polysle
