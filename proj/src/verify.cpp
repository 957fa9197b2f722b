#include "polysle/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "polysle/loewner.hpp"
#include "polysle/rng.hpp"
#include "polysle/scmap.hpp"

namespace polysle {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double wrap_angle(double a) {
    while (a > kPi) a -= 2.0 * kPi;
    while (a <= -kPi) a += 2.0 * kPi;
    return a;
}

double final_observable(const DrivingPath& path, const std::shared_ptr<const ScRules>& rules) {
    const DrivingState& st = path.states.back();
    ScEvaluator ev(st.Z, path.cfg.betas, rules);
    return ev.base_gap_integral(0.0, st.W) - st.D;
}

std::vector<double> drop_nan(const std::vector<double>& v) {
    std::vector<double> out;
    out.reserve(v.size());
    for (double x : v)
        if (!std::isnan(x)) out.push_back(x);
    return out;
}

} // namespace

std::string to_string(TestOutcome o) {
    switch (o) {
        case TestOutcome::Pass: return "pass";
        case TestOutcome::Fail: return "fail";
        default: return "inconclusive";
    }
}

nlohmann::json TestReport::to_json() const {
    nlohmann::json j;
    j["test"] = name;
    j["result"] = to_string(outcome);
    j["estimate"] = estimate;
    j["se"] = se;
    j["threshold"] = threshold;
    j["n"] = n;
    j["attrition"] = attrition;
    j["details"] = details;
    return j;
}

std::string TestReport::human_line() const {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%-20s %-13s estimate=%.6g se=%.3g threshold=%.3g n=%zu",
                  name.c_str(), to_string(outcome).c_str(), estimate, se, threshold, n);
    return buf;
}

// --- martingale --------------------------------------------------------------

TestReport martingale_test(const PrevertexConfig& cfg, const MartingaleParams& p) {
    const auto rep = validate_structure(cfg);
    if (!rep.ok) throw ConfigError("martingale_test: invalid configuration");

    SolverOptions opt;
    opt.accumulate = true;
    auto rules = make_sc_rules(cfg.betas, opt.quad_order);

    std::vector<double> samples(p.paths, kNaN);
    run_indexed(p.paths, p.threads, [&](std::size_t i) {
        const DrivingPath path =
            simulate_driver(cfg, p.T, p.dt, path_seed(p.seed, i), opt);
        if (path.sigma || path.end_time() < p.T * (1.0 - 1e-9)) return; // attrited
        samples[i] = final_observable(path, rules);
    });

    const auto kept = drop_nan(samples);
    const EnsembleStats st = stats_from_samples(kept);
    const double attrition =
        1.0 - static_cast<double>(kept.size()) / static_cast<double>(p.paths);

    TestReport r;
    r.name = "martingale";
    r.estimate = st.mean;
    r.se = st.se;
    r.threshold = p.se_multiplier * st.se;
    r.n = kept.size();
    r.attrition = attrition;
    r.details["T"] = p.T;
    r.details["dt"] = p.dt;
    r.details["seed"] = p.seed;
    r.details["se_multiplier"] = p.se_multiplier;
    if (attrition > p.attrition_threshold)
        r.outcome = TestOutcome::Inconclusive;
    else
        r.outcome = std::abs(st.mean) <= r.threshold ? TestOutcome::Pass : TestOutcome::Fail;
    return r;
}

// --- quadratic variation / time change ---------------------------------------

QvResult qv_test(const DrivingPath& path) {
    if (path.U.size() != path.states.size() || path.U.size() < 2)
        throw SimulationError("qv_test needs a path with the observable sampled at every step");
    QvResult q;
    for (std::size_t i = 1; i < path.U.size(); ++i) {
        const double d = path.U[i] - path.U[i - 1];
        q.qv += d * d;
    }
    q.A_end = path.states.back().A;
    q.rel_err = std::abs(q.qv - q.A_end) / q.A_end;
    return q;
}

TimeChange::TimeChange(const DrivingPath& path) {
    if (path.states.size() < 2) throw SimulationError("TimeChange: path too short");
    const bool with_u = path.U.size() == path.states.size();
    for (std::size_t i = 0; i < path.states.size(); ++i) {
        t_.push_back(path.states[i].t);
        a_.push_back(path.states[i].A);
        u_.push_back(with_u ? path.U[i] : 0.0);
        if (i > 0 && !(a_[i] > a_[i - 1]))
            throw SimulationError("TimeChange: clock is not strictly increasing");
    }
}

double TimeChange::tau(double a) const {
    if (a <= a_.front()) return t_.front();
    if (a >= a_.back()) return t_.back();
    const auto it = std::upper_bound(a_.begin(), a_.end(), a);
    const std::size_t i = static_cast<std::size_t>(it - a_.begin());
    const double frac = (a - a_[i - 1]) / (a_[i] - a_[i - 1]);
    return t_[i - 1] + frac * (t_[i] - t_[i - 1]);
}

double TimeChange::observable_at_clock(double a) const {
    if (a <= a_.front()) return u_.front();
    if (a >= a_.back()) return u_.back();
    const auto it = std::upper_bound(a_.begin(), a_.end(), a);
    const std::size_t i = static_cast<std::size_t>(it - a_.begin());
    const double frac = (a - a_[i - 1]) / (a_[i] - a_[i - 1]);
    return u_[i - 1] + frac * (u_[i] - u_[i - 1]);
}

TestReport qv_suite(const PrevertexConfig& cfg, const QvParams& p) {
    SolverOptions opt;
    opt.accumulate = true;
    opt.sample_observable = true;

    std::vector<double> rel(p.paths, kNaN);
    std::vector<double> a_end(p.paths, kNaN);
    std::vector<std::vector<double>> tracksU(p.paths);
    std::vector<std::vector<double>> tracksA(p.paths);

    run_indexed(p.paths, p.threads, [&](std::size_t i) {
        const DrivingPath path =
            simulate_driver(cfg, p.T, p.dt, path_seed(p.seed, i), opt);
        if (path.sigma || path.end_time() < p.T * (1.0 - 1e-9)) return;
        const QvResult q = qv_test(path);
        rel[i] = q.rel_err;
        a_end[i] = q.A_end;
        tracksU[i] = path.U;
        tracksA[i].reserve(path.states.size());
        for (const auto& st : path.states) tracksA[i].push_back(st.A);
    });

    auto kept_rel = drop_nan(rel);
    const double attrition =
        1.0 - static_cast<double>(kept_rel.size()) / static_cast<double>(p.paths);

    TestReport r;
    r.name = "qv";
    r.n = kept_rel.size();
    r.attrition = attrition;
    r.threshold = p.gate;
    r.details["T"] = p.T;
    r.details["dt"] = p.dt;
    r.details["seed"] = p.seed;
    if (kept_rel.empty()) {
        r.outcome = TestOutcome::Inconclusive;
        return r;
    }

    std::sort(kept_rel.begin(), kept_rel.end());
    const double median = kept_rel[kept_rel.size() / 2];
    r.estimate = median;

    // Brownian-motion check after the time change: increments of U over
    // equal clock intervals pooled across paths.
    double a_star = std::numeric_limits<double>::infinity();
    for (double a : a_end)
        if (!std::isnan(a)) a_star = std::min(a_star, a);
    const double da = a_star / static_cast<double>(p.tc_intervals);
    std::vector<double> increments;
    for (std::size_t i = 0; i < p.paths; ++i) {
        if (std::isnan(rel[i])) continue;
        DrivingPath tmp; // lightweight reconstruction for the inverse clock
        tmp.cfg = cfg;
        tmp.dt = p.dt;
        tmp.states.resize(tracksA[i].size());
        for (std::size_t j = 0; j < tracksA[i].size(); ++j) {
            tmp.states[j].t = static_cast<double>(j) * p.dt;
            tmp.states[j].A = tracksA[i][j];
        }
        tmp.U = tracksU[i];
        const TimeChange tc(tmp);
        for (std::size_t m = 1; m <= p.tc_intervals; ++m) {
            const double u1 = tc.observable_at_clock(static_cast<double>(m) * da);
            const double u0 = tc.observable_at_clock(static_cast<double>(m - 1) * da);
            increments.push_back(u1 - u0);
        }
    }
    double mean_inc = 0.0;
    for (double v : increments) mean_inc += v;
    mean_inc /= static_cast<double>(increments.size());
    double var_inc = 0.0;
    for (double v : increments) var_inc += (v - mean_inc) * (v - mean_inc);
    var_inc /= static_cast<double>(increments.size() - 1);
    const double se_var =
        var_inc * std::sqrt(2.0 / static_cast<double>(increments.size() - 1));
    const bool var_ok = std::abs(var_inc - da) <= 3.0 * se_var;

    r.se = se_var;
    r.details["median_rel_err"] = median;
    r.details["tc_interval"] = da;
    r.details["tc_increment_variance"] = var_inc;
    r.details["tc_variance_se"] = se_var;
    r.details["tc_samples"] = increments.size();

    if (attrition > 0.5)
        r.outcome = TestOutcome::Inconclusive;
    else
        r.outcome = (median <= p.gate && var_ok) ? TestOutcome::Pass : TestOutcome::Fail;
    return r;
}

// --- hitting probabilities ----------------------------------------------------

double hitting_probability_formula(double kappa, double x, double y) {
    if (!(kappa > 4.0))
        throw std::domain_error("hitting probability formula requires kappa > 4");
    if (!(x > 0.0) || !(y > 0.0)) throw std::domain_error("x and y must be positive");
    const double a = 2.0 / kappa;
    const double r = y / x;
    const double s = r / (r + 1.0);
    const double pref =
        gamma_fn(2.0 - 4.0 * a) / (gamma_fn(2.0 - 2.0 * a) * gamma_fn(1.0 - 2.0 * a));
    return pref * std::pow(s, 1.0 - 2.0 * a) * hyp2f1(2.0 * a, 1.0 - 2.0 * a, 2.0 - 2.0 * a, s);
}

TestReport hitting_probability_mc(const HitMcParams& p) {
    const double reference = hitting_probability_formula(p.kappa, p.x, p.y);

    std::vector<signed char> labels(p.paths, -1);
    run_indexed(p.paths, p.threads, [&](std::size_t i) {
        const SwallowLabel lab = swallow_order_streaming(p.kappa, p.x, p.y, p.dt, p.t_max,
                                                         path_seed(p.seed, i));
        labels[i] = lab == SwallowLabel::Neither ? -1 : (lab == SwallowLabel::LeftFirst ? 1 : 0);
    });

    std::size_t left = 0, right = 0, undecided = 0;
    for (signed char c : labels) {
        if (c < 0)
            ++undecided;
        else if (c == 1)
            ++left;
        else
            ++right;
    }
    const std::size_t decided = left + right;
    const double p_hat = decided ? static_cast<double>(left) / static_cast<double>(decided) : 0.0;
    const double se =
        decided ? std::sqrt(std::max(p_hat * (1.0 - p_hat), 1e-12) / static_cast<double>(decided))
                : 0.0;
    const double undecided_frac =
        static_cast<double>(undecided) / static_cast<double>(p.paths);

    TestReport r;
    r.name = "hitting-mc";
    r.estimate = p_hat;
    r.se = se;
    r.threshold = 3.0 * se;
    r.n = decided;
    r.attrition = undecided_frac;
    r.details["kappa"] = p.kappa;
    r.details["x"] = p.x;
    r.details["y"] = p.y;
    r.details["formula"] = reference;
    r.details["left_first"] = left;
    r.details["right_first"] = right;
    r.details["undecided"] = undecided;
    r.details["dt"] = p.dt;
    r.details["t_max"] = p.t_max;
    r.details["seed"] = p.seed;
    if (undecided_frac > p.undecided_threshold)
        r.outcome = TestOutcome::Inconclusive;
    else
        r.outcome =
            std::abs(p_hat - reference) <= 3.0 * se ? TestOutcome::Pass : TestOutcome::Fail;
    return r;
}

// --- rate identity ------------------------------------------------------------

double theorem_rate_check(const DrivingPath& path, cplx w, double t, double h) {
    const std::size_t i0 = path.index_of(t - h);
    const std::size_t i1 = path.index_of(t);
    const std::size_t i2 = path.index_of(t + h);
    if (path.sigma && t + h >= *path.sigma)
        throw SimulationError("theorem_rate_check: stencil crosses the collision time");

    FlowOptions fo;
    fo.t_end = t + h;
    fo.want_deriv = true;
    fo.sample_stride = 1;
    const FlowResult flow = flow_point(path, w, fo);
    if (flow.swallow_time)
        throw SimulationError("theorem_rate_check: point swallowed inside the stencil");
    if (flow.trajectory.size() <= i2)
        throw SimulationError("theorem_rate_check: flow ended before t + h");

    auto rules = make_sc_rules(path.cfg.betas);
    auto value_at = [&](std::size_t idx) {
        const ScEvaluator ev = evaluator_at(path, idx, rules);
        return ev.deriv(flow.trajectory[idx]) * flow.deriv_trajectory[idx];
    };
    const cplx ratio = value_at(i2) / value_at(i0);
    const cplx dLdt = std::log(ratio) / (2.0 * h);

    const DrivingState& st = path.states[i1];
    const cplx gw = flow.trajectory[i1] - st.W;
    cplx sum{0.0, 0.0};
    for (std::size_t l = 0; l < st.Z.size(); ++l)
        sum += path.cfg.betas[l] / (st.Z[l] - st.W);
    const cplx bracket = -2.0 / (gw * gw) + 2.0 / gw * sum;

    return std::abs(dLdt - bracket) / std::max(1.0, std::abs(bracket));
}

TestReport theorem_rate_suite(const DrivingPath& path, const std::vector<RateCheckSample>& samples,
                              double h, double tolerance) {
    TestReport r;
    r.name = "theorem-rate";
    r.threshold = tolerance;
    r.n = samples.size();
    double worst = 0.0;
    nlohmann::json list = nlohmann::json::array();
    for (const auto& s : samples) {
        const double res = theorem_rate_check(path, s.w, s.t, h);
        worst = std::max(worst, res);
        list.push_back({{"re_w", s.w.real()}, {"im_w", s.w.imag()}, {"t", s.t},
                        {"residual", res}});
    }
    r.estimate = worst;
    r.details["h"] = h;
    r.details["samples"] = list;
    r.outcome = worst <= tolerance ? TestOutcome::Pass : TestOutcome::Fail;
    return r;
}

// --- metric equivalence --------------------------------------------------------

TestReport metric_equivalence_test(const PrevertexConfig& cfg, const MetricEquivalenceParams& p) {
    TestReport r;
    r.name = "metric-equivalence";

    // (i) deterministic coefficient identity at random states
    Xoshiro256pp rng(p.seed);
    double worst = 0.0;
    for (std::size_t s = 0; s < p.coefficient_states; ++s) {
        std::vector<double> Z(cfg.prevertices.size());
        double neg = 0.0, pos = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < Z.size(); ++k) {
            Z[k] = cfg.prevertices[k] * (0.75 + 0.5 * rng.uniform01());
            if (Z[k] < 0.0) neg = std::max(neg, Z[k]);
            if (Z[k] > 0.0) pos = std::min(pos, Z[k]);
        }
        const double lo = std::isfinite(neg) ? 0.9 * neg : -1.0;
        const double hi = std::isfinite(pos) ? 0.9 * pos : 1.0;
        const double W = lo + (hi - lo) * rng.uniform01();

        const SystemCoefficients a = rho_coefficients(cfg, W, Z);
        const SystemCoefficients b = metric_coefficients_rescaled(cfg, W, Z, p.drift_sign);
        auto rel = [](double u, double v) {
            return std::abs(u - v) / std::max({1.0, std::abs(u), std::abs(v)});
        };
        worst = std::max(worst, rel(a.drift_W, b.drift_W));
        worst = std::max(worst, rel(a.diff2_W, b.diff2_W));
        for (std::size_t k = 0; k < a.drift_Z.size(); ++k)
            worst = std::max(worst, rel(a.drift_Z[k], b.drift_Z[k]));
    }
    const bool coeff_ok = worst <= p.coefficient_tol;
    r.details["coefficient_residual"] = worst;
    r.details["coefficient_tol"] = p.coefficient_tol;
    r.details["drift_sign"] = p.drift_sign;

    // (ii) distributional check: moments of W at the rescaled time t_star
    std::vector<double> metric_samples(p.paths, kNaN);
    std::vector<double> rho_samples(p.paths, kNaN);
    SolverOptions fast;
    fast.accumulate = false;

    run_indexed(p.paths, p.threads, [&](std::size_t i) {
        const DrivingPath m =
            simulate_metric_driver(cfg, p.S, p.ds, path_seed(p.seed, i), p.drift_sign);
        if (m.states.size() < 2 || m.states.back().A < p.t_star) return;
        // invert the clock at t_star
        const auto& st = m.states;
        std::size_t hi = 1;
        while (hi + 1 < st.size() && st[hi].A < p.t_star) ++hi;
        const double frac = (p.t_star - st[hi - 1].A) / (st[hi].A - st[hi - 1].A);
        metric_samples[i] = st[hi - 1].W + frac * (st[hi].W - st[hi - 1].W);
    });
    run_indexed(p.paths, p.threads, [&](std::size_t i) {
        const DrivingPath d = simulate_driver(cfg, p.t_star, p.ds,
                                              path_seed(p.seed ^ 0x5bf0a8b1u, i), fast);
        if (d.sigma || d.end_time() < p.t_star * (1.0 - 1e-9)) return;
        rho_samples[i] = d.states.back().W;
    });

    const auto ms = drop_nan(metric_samples);
    const auto rs = drop_nan(rho_samples);
    const double attrition =
        1.0 - static_cast<double>(std::min(ms.size(), rs.size())) /
                  static_cast<double>(p.paths);
    const MomentSummary mm = raw_moments(ms);
    const MomentSummary rm = raw_moments(rs);

    bool moments_ok = true;
    nlohmann::json moments = nlohmann::json::array();
    for (int k = 0; k < 4; ++k) {
        const double gate = 3.0 * std::sqrt(mm.se[k] * mm.se[k] + rm.se[k] * rm.se[k]);
        const bool ok = std::abs(mm.m[k] - rm.m[k]) <= gate;
        moments_ok = moments_ok && ok;
        moments.push_back({{"order", k + 1},
                           {"metric", mm.m[k]},
                           {"rho", rm.m[k]},
                           {"gate", gate},
                           {"ok", ok}});
    }
    r.details["moments"] = moments;
    r.details["t_star"] = p.t_star;
    r.details["paths_metric"] = ms.size();
    r.details["paths_rho"] = rs.size();
    r.estimate = worst;
    r.se = mm.se[0];
    r.threshold = p.coefficient_tol;
    r.n = std::min(ms.size(), rs.size());
    r.attrition = attrition;
    if (attrition > p.attrition_threshold)
        r.outcome = TestOutcome::Inconclusive;
    else
        r.outcome = (coeff_ok && moments_ok) ? TestOutcome::Pass : TestOutcome::Fail;
    return r;
}

// --- SC oracles ----------------------------------------------------------------

TestReport sc_oracles_suite(const PrevertexConfig& cfg, const ScOracleParams& p) {
    TestReport r;
    r.name = "sc-oracles";
    auto rules = make_sc_rules(cfg.betas, p.quad_order);
    const ScEvaluator ev(cfg.prevertices, cfg.betas, rules);
    nlohmann::json checks = nlohmann::json::array();
    bool all_ok = true;
    double worst = 0.0;
    auto add = [&](const std::string& name, double residual, double tol) {
        const bool ok = residual <= tol;
        all_ok = all_ok && ok;
        worst = std::max(worst, residual);
        checks.push_back({{"check", name}, {"residual", residual}, {"tol", tol}, {"ok", ok}});
    };

    // basepoint
    add("basepoint", std::abs(ev.eval(0.0)), 1e-13);

    // path independence for interior targets
    {
        double res = 0.0;
        const cplx targets[] = {{0.3, 0.9}, {-0.4, 1.3}, {0.1, 0.4}};
        for (cplx t : targets) {
            const cplx via_default = ev.eval(t);
            const std::vector<cplx> pts{{0.0, 0.0}, {0.0, 2.3}, t};
            const std::vector<int> sing{-1, -1, -1};
            const cplx via_high = ev.integrate_polyline(pts, sing);
            res = std::max(res, std::abs(via_default - via_high));
        }
        add("path_independence", res, 1e-9);
    }

    // straightness of arg SC' on every prevertex gap (outer rays included)
    {
        double res = 0.0;
        const auto& z = cfg.prevertices;
        for (std::size_t g = 0; g <= z.size(); ++g) {
            const double lo = g == 0 ? z.front() - 2.0 : z[g - 1];
            const double hi = g == z.size() ? z.back() + 2.0 : z[g];
            double ref = kNaN;
            for (int i = 1; i <= 5; ++i) {
                const double x = lo + (hi - lo) * i / 6.0;
                const double a = std::arg(ev.deriv(cplx(x, 0.0)));
                if (std::isnan(ref))
                    ref = a;
                else
                    res = std::max(res, std::abs(wrap_angle(a - ref)));
            }
        }
        add("straightness", res, p.straightness_tol);
    }

    // turning angle across each finite prevertex
    {
        double res = 0.0;
        for (std::size_t k = 0; k < cfg.prevertices.size(); ++k) {
            if (cfg.betas[k] >= 1.0) continue;
            const double zk = cfg.prevertices[k];
            const double delta = 1e-7 * std::max(1.0, std::abs(zk));
            const double right = std::arg(ev.deriv(cplx(zk + delta, 0.0)));
            const double left = std::arg(ev.deriv(cplx(zk - delta, 0.0)));
            res = std::max(res, std::abs(wrap_angle(right - left - kPi * cfg.betas[k])));
        }
        add("turning", res, p.turning_tol);
    }

    // finite-difference consistency of SC'
    {
        double res = 0.0;
        const double h = 1e-5;
        const cplx pts[] = {{0.2, 0.8}, {-0.3, 1.1}};
        for (cplx z : pts) {
            const cplx fd = (ev.eval(z + h) - ev.eval(z - h)) / (2.0 * h);
            const cplx an = ev.deriv(z);
            res = std::max(res, std::abs(fd - an) / std::max(1.0, std::abs(an)));
        }
        add("derivative_fd", res, 1e-6);
    }

    // closed forms for the two canonical two-corner configurations
    if (cfg.prevertices.size() == 2 && cfg.prevertices[0] == -1.0 && cfg.prevertices[1] == 1.0) {
        if (cfg.betas[0] == -1.0 && cfg.betas[1] == -1.0) {
            double res = 0.0;
            const cplx pts[] = {{2.0, 0.0}, {0.5, 0.5}, {-1.3, 0.7}, {0.0, 1.0}, {3.0, 2.0}};
            for (cplx z : pts)
                res = std::max(res, std::abs(ev.eval(z) - (z * z * z / 3.0 - z)));
            add("cubic_oracle", res, 1e-10);
        } else if (cfg.betas[0] == 0.5 && cfg.betas[1] == 0.5) {
            const double res =
                std::abs(std::abs(ev.eval_prevertex(1) - ev.eval_prevertex(0)) - kPi);
            add("arcsine_oracle", res, 1e-8);
        }
    }

    r.details["checks"] = checks;
    r.details["planar"] = ev.planar();
    r.estimate = worst;
    r.n = checks.size();
    r.outcome = all_ok ? TestOutcome::Pass : TestOutcome::Fail;
    return r;
}

} // namespace polysle
