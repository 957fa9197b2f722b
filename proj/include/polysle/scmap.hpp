#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "polysle/complexutil.hpp"
#include "polysle/geometry.hpp"
#include "polysle/quadrature.hpp"

namespace polysle {

struct DrivingPath; // driving.hpp

struct ScError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Quadrature rules shared by every time slice of one configuration: a plain
// Gauss-Legendre rule plus, per corner, the Gauss-Jacobi rule whose weight
// absorbs the endpoint factor (z - z_k)^{-beta_k}. Corners with beta_k >= 1
// (at infinity) get no endpoint rule.
class ScRules {
  public:
    ScRules(std::span<const double> betas, int order);

    int order() const { return order_; }
    const QuadRule& legendre() const { return gl_; }
    const QuadRule& endpoint(std::size_t k) const;
    bool endpoint_integrable(std::size_t k) const { return !endpoint_[k].nodes.empty(); }

  private:
    int order_;
    QuadRule gl_;
    std::vector<QuadRule> endpoint_;
};

// Evaluator for the Schwarz-Christoffel integral at a fixed prevertex
// slice: SC(z) = integral_0^z prod_k (s - z_k)^{-beta_k} ds, each factor
// taken on the branch analytic in the closed upper half-plane
// (arg(s - z_k) in [0, pi]). Immutable; evaluations are pure.
class ScEvaluator {
  public:
    ScEvaluator(std::vector<double> prevertices, std::vector<double> betas,
                std::shared_ptr<const ScRules> rules, int subdivision_limit = 200);

    std::size_t n() const { return z_.size(); }
    const std::vector<double>& prevertices() const { return z_; }
    const std::vector<double>& betas() const { return beta_; }

    // Integrand product at a non-prevertex point.
    cplx integrand(cplx s) const;

    // Contour integral from the basepoint 0 to target along an admissible
    // polyline; targets equal to a prevertex (within snapping tolerance) use
    // the matching singular-endpoint rule. Throws ScError for targets below
    // the real axis, at a corner with beta >= 1, or on subdivision overflow.
    cplx eval(cplx target) const;
    cplx eval_prevertex(std::size_t k) const;

    // SC'(z) = prod (z - z_k)^{-beta_k}; throws if z is a prevertex.
    cplx deriv(cplx z) const;
    double abs_deriv_real(double x) const; // |SC'(x)| for real x

    // SC''/SC' = -sum beta_k / (z - z_k).
    cplx log_deriv_sum(cplx z) const;

    // Unit phase of SC' on the prevertex gap containing the basepoint:
    // exp(-i pi sum_{z_k > 0} beta_k). Constant in time along a driving
    // path because force points never cross the driver or the basepoint.
    cplx base_gap_phase() const;

    // True if all beta_k lie in the planar range [-1, 1) and the implied
    // corner at infinity does too; false marks analytic continuation onto a
    // non-planar image.
    bool planar() const;

    // Integral along an explicit polyline (testing hook for path
    // independence); sing[i] is the prevertex index at waypoint i or -1.
    cplx integrate_polyline(std::span<const cplx> pts, std::span<const int> sing) const;

    // Real-axis integral of prod_k |x - z_k|^{-beta_k} between two points of
    // the basepoint gap (phase factored out; used by the drift correction
    // and the corrected-map observable).
    double base_gap_integral(double a, double b) const;

    // Same, with the extra factor sum_j beta_j zdot_j / (x - z_j).
    double base_gap_integral_weighted(double a, double b, std::span<const double> zdot) const;

    int subdivision_limit() const { return limit_; }

  private:
    cplx integrate_segment(cplx a, cplx b, int sing_a, int sing_b) const;
    cplx walk_plain(cplx from, cplx to) const;
    cplx gj_piece(cplx a, cplx b, int k) const;
    cplx gl_piece(cplx a, cplx b) const;
    int snap_to_prevertex(cplx z) const;
    double lift_height() const;

    std::vector<double> z_;
    std::vector<double> beta_;
    std::shared_ptr<const ScRules> rules_;
    int limit_;
};

std::shared_ptr<const ScRules> make_sc_rules(std::span<const double> betas, int order = 12);

// Spec-facing free functions.
cplx sc_eval(const ScEvaluator& ev, cplx z);
cplx sc_deriv(const ScEvaluator& ev, cplx z);
cplx sc_log_deriv_sum(const ScEvaluator& ev, cplx z);

// (d/dt SC_t)(W) for prevertex velocities zdot_k: the integral over [0, W]
// of the SC integrand times sum_j beta_j zdot_j / (s - Z_j). W must lie in
// the prevertex gap containing the basepoint.
cplx drift_correction_rate(const ScEvaluator& ev, double W, std::span<const double> zdot);

// f_t = SC_t - D_t with the accumulated drift correction D_t.
struct CorrectedMap {
    ScEvaluator evaluator;
    cplx correction{0.0, 0.0};
};

cplx corrected_map_eval(const CorrectedMap& cm, cplx z);

// Evaluator/corrected map at a recorded state of a driving path.
ScEvaluator evaluator_at(const DrivingPath& path, std::size_t index,
                         std::shared_ptr<const ScRules> rules);
CorrectedMap corrected_map_at(const DrivingPath& path, std::size_t index,
                              std::shared_ptr<const ScRules> rules);

// Corner images f_t(Z_t^k) at a grid time (t <= path end and before any
// collision); corners with beta_k >= 1 are marked at infinity.
PolygonSnapshot polygon_snapshot(const DrivingPath& path, double t);

// Sampled corner positions with central-difference velocity estimates and
// their Richardson diagnostics.
struct CornerTrack {
    std::size_t corner = 0;
    std::vector<double> times;
    std::vector<cplx> positions;
    std::vector<cplx> velocity_h;          // central difference, step h
    std::vector<cplx> velocity_richardson; // (4 v_{h} - v_{2h})/3
    std::vector<double> convergence_ratio; // |v_{4h}-v_{2h}| / |v_{2h}-v_{h}|
    double h = 0.0;
};

CornerTrack corner_trajectory(const DrivingPath& path, std::size_t corner, int stride = 16);

} // namespace polysle
