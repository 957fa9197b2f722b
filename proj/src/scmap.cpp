#include "polysle/scmap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "polysle/driving.hpp"

namespace polysle {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

} // namespace

// --- ScRules -----------------------------------------------------------------

ScRules::ScRules(std::span<const double> betas, int order) : order_(order) {
    gl_ = gauss_legendre(order);
    endpoint_.resize(betas.size());
    for (std::size_t k = 0; k < betas.size(); ++k) {
        if (betas[k] < 1.0) {
            endpoint_[k] =
                betas[k] == 0.0 ? gl_ : gauss_jacobi(order, 0.0, -betas[k]);
        }
        // beta >= 1: corner at infinity, integral to it diverges; no rule.
    }
}

const QuadRule& ScRules::endpoint(std::size_t k) const {
    if (endpoint_[k].nodes.empty())
        throw ScError("no endpoint rule for a corner at infinity (beta >= 1)");
    return endpoint_[k];
}

std::shared_ptr<const ScRules> make_sc_rules(std::span<const double> betas, int order) {
    return std::make_shared<const ScRules>(betas, order);
}

// --- ScEvaluator -------------------------------------------------------------

ScEvaluator::ScEvaluator(std::vector<double> prevertices, std::vector<double> betas,
                         std::shared_ptr<const ScRules> rules, int subdivision_limit)
    : z_(std::move(prevertices)), beta_(std::move(betas)), rules_(std::move(rules)),
      limit_(subdivision_limit) {
    if (z_.size() != beta_.size()) throw ScError("prevertex/beta size mismatch");
    if (!rules_ && !z_.empty()) throw ScError("missing quadrature rules");
}

cplx ScEvaluator::integrand(cplx s) const {
    if (z_.empty()) return {1.0, 0.0};
    if (s.imag() == 0.0) {
        // boundary fast path: magnitude and phase accumulate separately
        double logmag = 0.0;
        double phase = 0.0;
        const double x = s.real();
        for (std::size_t k = 0; k < z_.size(); ++k) {
            logmag += beta_[k] * std::log(std::abs(x - z_[k]));
            if (x < z_[k]) phase += beta_[k];
        }
        return std::polar(std::exp(-logmag), -kPi * phase);
    }
    cplx acc{0.0, 0.0};
    for (std::size_t k = 0; k < z_.size(); ++k) acc += beta_[k] * log_uhp(s - z_[k]);
    return std::exp(-acc);
}

int ScEvaluator::snap_to_prevertex(cplx z) const {
    if (z.imag() != 0.0) return -1;
    for (std::size_t k = 0; k < z_.size(); ++k) {
        const double tol = 1e-12 * std::max(1.0, std::abs(z_[k]));
        if (std::abs(z.real() - z_[k]) <= tol) return static_cast<int>(k);
    }
    return -1;
}

double ScEvaluator::lift_height() const {
    if (z_.empty()) return 1.0;
    if (z_.size() == 1) return 0.5 * std::abs(z_[0]);
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < z_.size(); ++k) gap = std::min(gap, z_[k] - z_[k - 1]);
    return 0.5 * gap;
}

cplx ScEvaluator::gl_piece(cplx a, cplx b) const {
    if (!rules_) throw ScError("missing quadrature rules");
    const QuadRule& rule = rules_->legendre();
    const cplx half = 0.5 * (b - a);
    cplx acc{0.0, 0.0};
    for (int i = 0; i < rule.size(); ++i)
        acc += rule.weights[i] * integrand(a + (rule.nodes[i] + 1.0) * half);
    return half * acc;
}

cplx ScEvaluator::gj_piece(cplx a, cplx b, int k) const {
    const QuadRule& rule = rules_->endpoint(static_cast<std::size_t>(k));
    const cplx half = 0.5 * (b - a);
    cplx acc{0.0, 0.0};
    for (int i = 0; i < rule.size(); ++i) {
        const cplx s = a + (rule.nodes[i] + 1.0) * half;
        // product with factor k removed; its singular part lives in the rule
        cplx lg{0.0, 0.0};
        if (s.imag() == 0.0) {
            double logmag = 0.0, phase = 0.0;
            for (std::size_t j = 0; j < z_.size(); ++j) {
                if (static_cast<int>(j) == k) continue;
                logmag += beta_[j] * std::log(std::abs(s.real() - z_[j]));
                if (s.real() < z_[j]) phase += beta_[j];
            }
            acc += rule.weights[i] * std::polar(std::exp(-logmag), -kPi * phase);
            continue;
        }
        for (std::size_t j = 0; j < z_.size(); ++j) {
            if (static_cast<int>(j) == k) continue;
            lg += beta_[j] * log_uhp(s - z_[j]);
        }
        acc += rule.weights[i] * std::exp(-lg);
    }
    // int_a^b g(s) (s-a)^{-beta} ds = (b-a)^{1-beta} 2^{beta-1} sum w g
    const double bk = beta_[static_cast<std::size_t>(k)];
    return pow_uhp(b - a, 1.0 - bk) * std::pow(2.0, bk - 1.0) * acc;
}

namespace {

double point_segment_distance(cplx zk, cplx a, cplx b) {
    const cplx d = b - a;
    const double len2 = std::norm(d);
    if (len2 == 0.0) return std::abs(zk - a);
    double s = ((zk.real() - a.real()) * d.real() + (zk.imag() - a.imag()) * d.imag()) / len2;
    s = std::clamp(s, 0.0, 1.0);
    return std::abs(zk - (a + s * d));
}

} // namespace

// One-half rule: no piece longer than twice its distance (as a segment) to
// the nearest prevertex not absorbed at an endpoint.
cplx ScEvaluator::walk_plain(cplx from, cplx to) const {
    auto seg_dist = [this](cplx a, cplx b) {
        double d = std::numeric_limits<double>::infinity();
        for (double zk : z_) d = std::min(d, point_segment_distance({zk, 0.0}, a, b));
        return d;
    };
    cplx acc{0.0, 0.0};
    cplx p = from;
    int count = 0;
    while (true) {
        const double remaining = std::abs(to - p);
        if (remaining == 0.0) break;
        double len = remaining;
        for (int guard = 0; guard < 80; ++guard) {
            const cplx q = p + (len / remaining) * (to - p);
            const double d = seg_dist(p, q);
            if (!(d > 0.0)) throw ScError("quadrature path touches a prevertex");
            if (std::isinf(d) || len <= 2.0 * d) break;
            len *= 0.5;
        }
        const bool final_piece = len >= remaining;
        const cplx q = final_piece ? to : p + (len / remaining) * (to - p);
        acc += gl_piece(p, q);
        p = q;
        if (final_piece) break;
        if (++count > limit_) throw ScError("subdivision limit exceeded");
    }
    return acc;
}

cplx ScEvaluator::integrate_segment(cplx a, cplx b, int sing_a, int sing_b) const {
    if (a == b) return {0.0, 0.0};
    if (sing_a >= 0 && sing_b >= 0) {
        const cplx mid = 0.5 * (a + b);
        return integrate_segment(a, mid, sing_a, -1) + integrate_segment(mid, b, -1, sing_b);
    }
    if (sing_b >= 0) return -integrate_segment(b, a, sing_b, -1);
    if (sing_a >= 0) {
        auto seg_dist_other = [&](cplx q) {
            double d = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < z_.size(); ++k)
                if (static_cast<int>(k) != sing_a)
                    d = std::min(d, point_segment_distance({z_[k], 0.0}, a, q));
            return d;
        };
        const double total = std::abs(b - a);
        double len = total;
        for (int guard = 0; guard < 80; ++guard) {
            const cplx q = a + (len / total) * (b - a);
            const double d = seg_dist_other(q);
            if (std::isinf(d) || len <= 2.0 * d) break;
            len *= 0.5;
        }
        const bool whole = len >= total;
        const cplx zr = whole ? b : a + (len / total) * (b - a);
        cplx acc = gj_piece(a, zr, sing_a);
        if (!whole) acc += walk_plain(zr, b);
        return acc;
    }
    return walk_plain(a, b);
}

cplx ScEvaluator::integrate_polyline(std::span<const cplx> pts, std::span<const int> sing) const {
    cplx acc{0.0, 0.0};
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
        acc += integrate_segment(pts[i], pts[i + 1], sing[i], sing[i + 1]);
    return acc;
}

cplx ScEvaluator::eval_prevertex(std::size_t k) const {
    if (k >= z_.size()) throw ScError("prevertex index out of range");
    if (beta_[k] >= 1.0)
        throw ScError("target is a corner at infinity (beta >= 1): integral diverges");
    const double x = z_[k];
    // real-axis route if no corner at infinity sits strictly between 0 and x
    bool blocked = false;
    std::vector<cplx> pts{cplx(0.0, 0.0)};
    std::vector<int> sing{-1};
    const double lo = std::min(0.0, x), hi = std::max(0.0, x);
    std::vector<std::size_t> between;
    for (std::size_t j = 0; j < z_.size(); ++j) {
        if (j == k) continue;
        if (z_[j] > lo && z_[j] < hi) {
            if (beta_[j] >= 1.0) blocked = true;
            between.push_back(j);
        }
    }
    if (!blocked) {
        std::sort(between.begin(), between.end(),
                  [&](std::size_t u, std::size_t v) {
                      return std::abs(z_[u]) < std::abs(z_[v]);
                  });
        for (std::size_t j : between) {
            pts.emplace_back(z_[j], 0.0);
            sing.push_back(static_cast<int>(j));
        }
    } else {
        pts.emplace_back(0.0, lift_height());
        sing.push_back(-1);
    }
    pts.emplace_back(x, 0.0);
    sing.push_back(static_cast<int>(k));
    return integrate_polyline(pts, sing);
}

cplx ScEvaluator::eval(cplx target) const {
    if (target.imag() < 0.0) throw ScError("target below the real axis");
    if (z_.empty()) return target; // empty product: SC is the identity
    const int snap = snap_to_prevertex(target);
    if (snap >= 0) return eval_prevertex(static_cast<std::size_t>(snap));
    if (target == cplx(0.0, 0.0)) return {0.0, 0.0};

    if (target.imag() == 0.0) {
        const double x = target.real();
        const double lo = std::min(0.0, x), hi = std::max(0.0, x);
        bool blocked = false;
        std::vector<std::size_t> between;
        for (std::size_t j = 0; j < z_.size(); ++j)
            if (z_[j] > lo && z_[j] < hi) {
                if (beta_[j] >= 1.0) blocked = true;
                between.push_back(j);
            }
        if (!blocked) {
            std::sort(between.begin(), between.end(),
                      [&](std::size_t u, std::size_t v) {
                          return std::abs(z_[u]) < std::abs(z_[v]);
                      });
            std::vector<cplx> pts{cplx(0.0, 0.0)};
            std::vector<int> sing{-1};
            for (std::size_t j : between) {
                pts.emplace_back(z_[j], 0.0);
                sing.push_back(static_cast<int>(j));
            }
            pts.push_back(target);
            sing.push_back(-1);
            return integrate_polyline(pts, sing);
        }
    }
    const std::vector<cplx> pts{cplx(0.0, 0.0), cplx(0.0, lift_height()), target};
    const std::vector<int> sing{-1, -1, -1};
    return integrate_polyline(pts, sing);
}

cplx ScEvaluator::deriv(cplx z) const {
    if (snap_to_prevertex(z) >= 0) throw ScError("SC' is singular at a prevertex");
    return integrand(z);
}

double ScEvaluator::abs_deriv_real(double x) const {
    double logmag = 0.0;
    for (std::size_t k = 0; k < z_.size(); ++k)
        logmag += beta_[k] * std::log(std::abs(x - z_[k]));
    return std::exp(-logmag);
}

cplx ScEvaluator::log_deriv_sum(cplx z) const {
    if (snap_to_prevertex(z) >= 0) throw ScError("SC''/SC' is singular at a prevertex");
    cplx acc{0.0, 0.0};
    for (std::size_t k = 0; k < z_.size(); ++k) acc += beta_[k] / (z - z_[k]);
    return -acc;
}

cplx ScEvaluator::base_gap_phase() const {
    double c = 0.0;
    for (std::size_t k = 0; k < z_.size(); ++k)
        if (z_[k] > 0.0) c += beta_[k];
    return std::polar(1.0, -kPi * c);
}

bool ScEvaluator::planar() const {
    for (double b : beta_)
        if (b < -1.0 || b >= 1.0) return false;
    const double sum = std::accumulate(beta_.begin(), beta_.end(), 0.0);
    if (std::abs(sum - 2.0) < 1e-12) return true;
    const double beta_inf = 2.0 - sum;
    return beta_inf >= 1.0 && beta_inf <= 3.0;
}

namespace {

// Real-axis walker through the basepoint gap; f is the extra factor applied
// to the |SC'| magnitude (phase is constant over the gap and factored out).
template <class Extra>
double gap_walk(const ScEvaluator& ev, const QuadRule& rule, double a, double b, Extra&& extra,
                int limit) {
    const auto& z = ev.prevertices();
    const auto& beta = ev.betas();
    auto dist = [&z](double x) {
        double d = std::numeric_limits<double>::infinity();
        for (double zk : z) d = std::min(d, std::abs(x - zk));
        return d;
    };
    double acc = 0.0;
    double p = a;
    int count = 0;
    while (true) {
        const double remaining = std::abs(b - p);
        if (remaining == 0.0) break;
        const double dp = dist(p);
        if (!(dp > 0.0)) throw ScError("gap integral touches a prevertex");
        // collinear one-half rule: both endpoints at least half a piece away
        double len = std::min(remaining, 2.0 * dp);
        const double dir = b > p ? 1.0 : -1.0;
        for (int guard = 0; guard < 80; ++guard) {
            if (dist(p + dir * len) >= 0.5 * len) break;
            len *= 0.5;
        }
        const bool final_piece = len >= remaining;
        const double q = final_piece ? b : p + dir * len;
        const double half = 0.5 * (q - p);
        double piece = 0.0;
        for (int i = 0; i < rule.size(); ++i) {
            const double x = p + (rule.nodes[i] + 1.0) * half;
            double logmag = 0.0;
            for (std::size_t k = 0; k < z.size(); ++k)
                logmag += beta[k] * std::log(std::abs(x - z[k]));
            piece += rule.weights[i] * std::exp(-logmag) * extra(x);
        }
        acc += half * piece;
        p = q;
        if (final_piece) break;
        if (++count > limit) throw ScError("subdivision limit exceeded");
    }
    return acc;
}

void require_in_base_gap(const ScEvaluator& ev, double x, const char* what) {
    for (double zk : ev.prevertices())
        if ((zk > 0.0 && x >= zk) || (zk < 0.0 && x <= zk))
            throw ScError(std::string(what) + ": point outside the prevertex gap containing 0");
}

} // namespace

double ScEvaluator::base_gap_integral(double a, double b) const {
    if (z_.empty()) return b - a;
    require_in_base_gap(*this, a, "base_gap_integral");
    require_in_base_gap(*this, b, "base_gap_integral");
    return gap_walk(*this, rules_->legendre(), a, b, [](double) { return 1.0; }, limit_);
}

double ScEvaluator::base_gap_integral_weighted(double a, double b,
                                               std::span<const double> zdot) const {
    if (z_.empty()) return 0.0;
    require_in_base_gap(*this, a, "drift correction");
    require_in_base_gap(*this, b, "drift correction");
    return gap_walk(
        *this, rules_->legendre(), a, b,
        [&](double x) {
            double s = 0.0;
            for (std::size_t j = 0; j < z_.size(); ++j) s += beta_[j] * zdot[j] / (x - z_[j]);
            return s;
        },
        limit_);
}

// --- free functions ----------------------------------------------------------

cplx sc_eval(const ScEvaluator& ev, cplx z) { return ev.eval(z); }
cplx sc_deriv(const ScEvaluator& ev, cplx z) { return ev.deriv(z); }
cplx sc_log_deriv_sum(const ScEvaluator& ev, cplx z) { return ev.log_deriv_sum(z); }

cplx drift_correction_rate(const ScEvaluator& ev, double W, std::span<const double> zdot) {
    if (ev.n() == 0) return {0.0, 0.0};
    return ev.base_gap_phase() * ev.base_gap_integral_weighted(0.0, W, zdot);
}

cplx corrected_map_eval(const CorrectedMap& cm, cplx z) {
    return cm.evaluator.eval(z) - cm.correction;
}

ScEvaluator evaluator_at(const DrivingPath& path, std::size_t index,
                         std::shared_ptr<const ScRules> rules) {
    const DrivingState& st = path.states.at(index);
    return ScEvaluator(st.Z, path.cfg.betas, std::move(rules));
}

CorrectedMap corrected_map_at(const DrivingPath& path, std::size_t index,
                              std::shared_ptr<const ScRules> rules) {
    ScEvaluator ev = evaluator_at(path, index, std::move(rules));
    const cplx correction = ev.base_gap_phase() * path.states.at(index).D;
    return CorrectedMap{std::move(ev), correction};
}

PolygonSnapshot polygon_snapshot(const DrivingPath& path, double t) {
    if (path.sigma && t >= *path.sigma)
        throw SimulationError("snapshot time is at or past the collision time");
    const std::size_t idx = path.index_of(t);
    auto rules = make_sc_rules(path.cfg.betas);
    const CorrectedMap cm = corrected_map_at(path, idx, rules);

    PolygonSnapshot snap;
    snap.time = t;
    snap.closed = std::abs(exterior_angle_sum(path.cfg.betas) - 2.0) < 1e-9;
    for (std::size_t k = 0; k < path.cfg.betas.size(); ++k) {
        Corner c;
        c.beta = path.cfg.betas[k];
        if (c.beta < 1.0)
            c.position = cm.evaluator.eval_prevertex(k) - cm.correction;
        snap.corners.push_back(c);
    }
    return snap;
}

CornerTrack corner_trajectory(const DrivingPath& path, std::size_t corner, int stride) {
    if (corner >= path.cfg.betas.size()) throw SimulationError("corner index out of range");
    if (path.cfg.betas[corner] >= 1.0)
        throw SimulationError("corner at infinity has no finite trajectory");
    auto rules = make_sc_rules(path.cfg.betas);

    CornerTrack track;
    track.corner = corner;
    track.h = stride * path.dt;
    for (std::size_t i = 0; i < path.states.size(); i += static_cast<std::size_t>(stride)) {
        const CorrectedMap cm = corrected_map_at(path, i, rules);
        track.times.push_back(path.states[i].t);
        track.positions.push_back(cm.evaluator.eval_prevertex(corner) - cm.correction);
    }
    const std::size_t m = track.positions.size();
    const double h = track.h;
    for (std::size_t j = 0; j + 8 < m; ++j) {
        const std::size_t c = j + 4; // center with room for +-4 samples
        const cplx vh = (track.positions[c + 1] - track.positions[c - 1]) / (2.0 * h);
        const cplx v2h = (track.positions[c + 2] - track.positions[c - 2]) / (4.0 * h);
        const cplx v4h = (track.positions[c + 4] - track.positions[c - 4]) / (8.0 * h);
        track.velocity_h.push_back(vh);
        track.velocity_richardson.push_back((4.0 * vh - v2h) / 3.0);
        const double num = std::abs(v4h - v2h);
        const double den = std::abs(v2h - vh);
        track.convergence_ratio.push_back(den > 0.0 ? num / den
                                                    : std::numeric_limits<double>::infinity());
    }
    return track;
}

} // namespace polysle
