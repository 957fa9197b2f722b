#include "polysle/driving.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "polysle/rng.hpp"
#include "polysle/scmap.hpp"

namespace polysle {

namespace {

double min_gap(double W, std::span<const double> Z) {
    double d = std::numeric_limits<double>::infinity();
    for (double z : Z) d = std::min(d, std::abs(W - z));
    return d;
}

double drift_at(double W, std::span<const double> Z, std::span<const double> rho) {
    double s = 0.0;
    for (std::size_t k = 0; k < Z.size(); ++k) s += rho[k] / (W - Z[k]);
    return s;
}

// One nominal step of the rho-system with recursive halving. W is carried
// as sqrt(kappa) * Bsum + driftsum so that the rho = 0 case reproduces the
// scaled Brownian path bit-for-bit.
struct RhoStepper {
    std::span<const double> rho;
    double sqrt_kappa;
    int max_depth;

    void advance(double& Bsum, double& driftsum, std::vector<double>& Z, double h, double dB,
                 int depth) const {
        const double W = sqrt_kappa * Bsum + driftsum;
        const double drift = drift_at(W, Z, rho);
        double dW = sqrt_kappa * dB + drift * h;
        const double d = min_gap(W, Z);
        if (std::abs(dW) > 0.5 * d && depth < max_depth) {
            advance(Bsum, driftsum, Z, 0.5 * h, 0.5 * dB, depth + 1);
            advance(Bsum, driftsum, Z, 0.5 * h, 0.5 * dB, depth + 1);
            return;
        }
        for (std::size_t k = 0; k < Z.size(); ++k) Z[k] += 2.0 / (Z[k] - W) * h;
        Bsum += dB;
        driftsum += drift * h;
        if (std::isfinite(d) && d > 0.0) {
            // depth exhausted: clamp the move to preserve force-point sides
            const double Wnew = sqrt_kappa * Bsum + driftsum;
            const double move = Wnew - W;
            if (std::abs(move) > 0.5 * d)
                driftsum += std::copysign(0.5 * d, move) - move;
        }
    }
};

struct Accumulators {
    std::shared_ptr<const ScRules> rules;
    std::vector<double> zdot;
    double rate = 0.0; // drift-correction integrand at the current state
    double phi2 = 0.0; // |SC'(W)|^2

    void eval(const PrevertexConfig& cfg, const DrivingState& st, int limit) {
        ScEvaluator ev(st.Z, cfg.betas, rules, limit);
        zdot.resize(st.Z.size());
        for (std::size_t k = 0; k < st.Z.size(); ++k) zdot[k] = 2.0 / (st.Z[k] - st.W);
        rate = ev.base_gap_integral_weighted(0.0, st.W, zdot);
        const double phi = ev.abs_deriv_real(st.W);
        phi2 = phi * phi;
    }
};

double observable_at(const PrevertexConfig& cfg, const DrivingState& st,
                     const std::shared_ptr<const ScRules>& rules, int limit) {
    ScEvaluator ev(st.Z, cfg.betas, rules, limit);
    return ev.base_gap_integral(0.0, st.W) - st.D;
}

DrivingPath simulate_core(const PrevertexConfig& cfg, double T, double dt,
                          std::uint64_t seed, const SolverOptions& opt,
                          std::span<const double> given_increments, bool use_given,
                          const std::function<double(double)>* injected_driver) {
    if (!(T > 0.0) || !(dt > 0.0)) throw SimulationError("T and dt must be positive");
    const auto rho = cfg.rhos();
    const double sqrt_k = std::sqrt(cfg.kappa);
    const double eps_coll = opt.eps_coll_factor * std::sqrt(cfg.kappa * dt);

    DrivingPath path;
    path.cfg = cfg;
    path.dt = dt;
    path.seed = seed;
    path.eps_coll = eps_coll;

    const std::size_t steps =
        use_given ? given_increments.size()
                  : static_cast<std::size_t>(std::llround(T / dt));

    Xoshiro256pp rng(seed);
    RhoStepper stepper{rho, sqrt_k, opt.max_refine_depth};

    DrivingState st;
    st.Z = cfg.prevertices;
    if (injected_driver) st.W = (*injected_driver)(0.0);
    double Bsum = 0.0, driftsum = 0.0;

    Accumulators acc;
    const bool track = opt.accumulate && !cfg.prevertices.empty();
    if (track) {
        acc.rules = make_sc_rules(cfg.betas, opt.quad_order);
        acc.eval(cfg, st, opt.subdivision_limit);
    }
    path.states.push_back(st);
    if (opt.sample_observable) path.U.push_back(track ? observable_at(cfg, st, acc.rules,
                                                                      opt.subdivision_limit)
                                                      : st.W);

    for (std::size_t i = 1; i <= steps; ++i) {
        if (min_gap(st.W, st.Z) < eps_coll) {
            path.sigma = st.t;
            break;
        }
        if (injected_driver) {
            // deterministic driver: only the force points flow, substepped
            // against the linearly interpolated driver
            const double Wnew = (*injected_driver)(static_cast<double>(i) * dt);
            std::vector<double> Zt;
            for (std::size_t parts = 1;; parts *= 2) {
                const bool last = parts >= (std::size_t{1} << std::min(opt.max_refine_depth, 20));
                const double h = dt / static_cast<double>(parts);
                bool ok = true;
                Zt = st.Z;
                for (std::size_t p = 0; p < parts && ok; ++p) {
                    const double frac = (static_cast<double>(p) + 0.5) /
                                        static_cast<double>(parts);
                    const double Wmid = st.W + frac * (Wnew - st.W);
                    for (double& z : Zt) {
                        const double dz = 2.0 / (z - Wmid) * h;
                        if (std::abs(dz) > 0.5 * std::abs(z - Wmid) && !last) {
                            ok = false;
                            break;
                        }
                        z += dz;
                    }
                }
                if (ok || last) break;
            }
            st.Z = std::move(Zt);
            st.W = Wnew;
        } else {
            const double dB = use_given ? given_increments[i - 1]
                                        : std::sqrt(dt) * rng.normal();
            stepper.advance(Bsum, driftsum, st.Z, dt, dB, 0);
            st.W = sqrt_k * Bsum + driftsum;
        }
        st.t = static_cast<double>(i) * dt;

        if (track) {
            const double rate_prev = acc.rate;
            const double phi2_prev = acc.phi2;
            acc.eval(cfg, st, opt.subdivision_limit);
            st.D += 0.5 * (rate_prev + acc.rate) * dt;
            st.A += 0.5 * cfg.kappa * (phi2_prev + acc.phi2) * dt;
        }
        path.states.push_back(st);
        if (opt.sample_observable)
            path.U.push_back(track ? observable_at(cfg, st, acc.rules, opt.subdivision_limit)
                                   : st.W);
    }
    if (!path.sigma && !path.states.empty() && min_gap(st.W, st.Z) < eps_coll &&
        !st.Z.empty())
        path.sigma = st.t;
    return path;
}

} // namespace

std::size_t DrivingPath::index_of(double t) const {
    const auto i = static_cast<std::size_t>(std::llround(t / dt));
    if (i >= states.size() || std::abs(states[i].t - t) > 1e-9 * std::max(1.0, std::abs(t)))
        throw SimulationError("time is not on the recorded grid");
    return i;
}

double DrivingPath::driver_at(double t) const {
    if (states.empty()) throw SimulationError("empty path");
    if (t <= 0.0) return states.front().W;
    if (t >= end_time()) return states.back().W;
    const auto i = static_cast<std::size_t>(t / dt);
    const std::size_t j = std::min(i, states.size() - 2);
    const double frac = (t - states[j].t) / dt;
    return states[j].W + frac * (states[j + 1].W - states[j].W);
}

DrivingState step_driver(const DrivingState& state, const PrevertexConfig& cfg, double dt,
                         double dB, double eps_coll) {
    if (!(dt > 0.0)) throw SimulationError("dt must be positive");
    if (eps_coll > 0.0 && min_gap(state.W, state.Z) < eps_coll)
        throw SimulationError("collision tolerance breached before stepping (sigma reached)");
    const auto rho = cfg.rhos();
    DrivingState next = state;
    next.W = state.W + std::sqrt(cfg.kappa) * dB + drift_at(state.W, state.Z, rho) * dt;
    for (std::size_t k = 0; k < next.Z.size(); ++k)
        next.Z[k] = state.Z[k] + 2.0 / (state.Z[k] - state.W) * dt;
    next.t = state.t + dt;
    return next;
}

DrivingPath simulate_driver(const PrevertexConfig& cfg, double T, double dt, std::uint64_t seed,
                            const SolverOptions& opt) {
    return simulate_core(cfg, T, dt, seed, opt, {}, false, nullptr);
}

DrivingPath simulate_driver_increments(const PrevertexConfig& cfg, double dt,
                                       std::span<const double> dB, const SolverOptions& opt) {
    return simulate_core(cfg, dB.size() * dt, dt, 0, opt, dB, true, nullptr);
}

DrivingPath simulate_with_driver(const PrevertexConfig& cfg, double T, double dt,
                                 const std::function<double(double)>& driver,
                                 const SolverOptions& opt) {
    DrivingPath path = simulate_core(cfg, T, dt, 0, opt, {}, false, &driver);
    return path;
}

std::optional<double> collision_time(const DrivingPath& path) {
    for (const auto& st : path.states)
        if (!st.Z.empty() && min_gap(st.W, st.Z) < path.eps_coll) return st.t;
    return std::nullopt;
}

DrivingPath simulate_metric_driver(const PrevertexConfig& cfg, double S, double ds,
                                   std::uint64_t seed, int drift_sign,
                                   const SolverOptions& opt) {
    if (!(S > 0.0) || !(ds > 0.0)) throw SimulationError("S and ds must be positive");
    if (drift_sign != 1 && drift_sign != -1)
        throw SimulationError("drift_sign must be +1 or -1");

    DrivingPath path;
    path.cfg = cfg;
    path.dt = ds;
    path.seed = seed;
    path.metric_time = true;
    path.eps_coll = opt.eps_coll_factor * std::sqrt(cfg.kappa * ds);

    const std::size_t steps = static_cast<std::size_t>(std::llround(S / ds));
    Xoshiro256pp rng(seed);

    auto phi_of = [&cfg](double W, std::span<const double> Z) {
        double logmag = 0.0;
        for (std::size_t k = 0; k < Z.size(); ++k)
            logmag += cfg.betas[k] * std::log(std::abs(W - Z[k]));
        return std::exp(-logmag);
    };

    DrivingState st;
    st.Z = cfg.prevertices;
    double phi = phi_of(st.W, st.Z);
    path.states.push_back(st);

    const double sign = static_cast<double>(drift_sign);
    for (std::size_t i = 1; i <= steps; ++i) {
        if (!std::isfinite(phi) || phi == 0.0 || min_gap(st.W, st.Z) < 1e-12) {
            path.sigma = st.t;
            break;
        }
        const double dB = std::sqrt(ds) * rng.normal();
        // refine by halving while the driver move exceeds half the gap
        const double clock_prev = 1.0 / (cfg.kappa * phi * phi);
        std::vector<double> Z = st.Z;
        double W = st.W;
        double p = phi;
        bool degenerate = false;
        const std::size_t max_parts = std::size_t{1} << std::min(opt.max_refine_depth, 20);
        std::size_t parts = 1;
        while (parts <= max_parts) {
            Z = st.Z;
            W = st.W;
            p = phi;
            bool ok = true;
            const double h = ds / static_cast<double>(parts);
            const double db = dB / static_cast<double>(parts);
            for (std::size_t q = 0; q < parts; ++q) {
                double drift = 0.0;
                for (std::size_t k = 0; k < Z.size(); ++k)
                    drift += cfg.betas[k] / (W - Z[k]);
                const double dW = db / p + sign * drift / (2.0 * p * p) * h;
                const double gap = min_gap(W, Z);
                if (std::abs(dW) > 0.5 * gap && parts < max_parts) {
                    ok = false;
                    break;
                }
                for (std::size_t k = 0; k < Z.size(); ++k)
                    Z[k] += 2.0 / (cfg.kappa * p * p * (Z[k] - W)) * h;
                W += dW;
                p = phi_of(W, Z);
                if (!std::isfinite(p) || p == 0.0) {
                    degenerate = true;
                    break;
                }
            }
            if (ok || degenerate) break;
            parts *= 2;
        }
        if (degenerate) {
            path.sigma = st.t;
            break;
        }
        st.W = W;
        st.Z = Z;
        st.t = static_cast<double>(i) * ds;
        phi = p;
        st.A += 0.5 * (clock_prev + 1.0 / (cfg.kappa * phi * phi)) * ds;
        path.states.push_back(st);
    }
    return path;
}

DrivingPath rescale_to_rho_time(const DrivingPath& metric_path, double dt_out) {
    if (!metric_path.metric_time)
        throw SimulationError("rescale_to_rho_time expects a metric-time path");
    const auto& states = metric_path.states;
    if (states.size() < 2) throw SimulationError("metric path too short to rescale");
    for (std::size_t i = 1; i < states.size(); ++i)
        if (!(states[i].A > states[i - 1].A))
            throw SimulationError("non-monotone clock: cannot invert the time change");

    DrivingPath out;
    out.cfg = metric_path.cfg;
    out.dt = dt_out;
    out.seed = metric_path.seed;
    out.eps_coll = metric_path.eps_coll;

    const double t_end = states.back().A;
    const auto steps = static_cast<std::size_t>(t_end / dt_out);
    std::size_t hi = 1;
    for (std::size_t j = 0; j <= steps; ++j) {
        const double t = static_cast<double>(j) * dt_out;
        while (hi + 1 < states.size() && states[hi].A < t) ++hi;
        const auto& s0 = states[hi - 1];
        const auto& s1 = states[hi];
        const double frac = (t - s0.A) / (s1.A - s0.A);
        DrivingState st;
        st.t = t;
        st.A = t;
        st.W = s0.W + frac * (s1.W - s0.W);
        st.Z.resize(s0.Z.size());
        for (std::size_t k = 0; k < st.Z.size(); ++k)
            st.Z[k] = s0.Z[k] + frac * (s1.Z[k] - s0.Z[k]);
        out.states.push_back(std::move(st));
    }
    return out;
}

SystemCoefficients rho_coefficients(const PrevertexConfig& cfg, double W,
                                    std::span<const double> Z) {
    SystemCoefficients c;
    const auto rho = cfg.rhos();
    c.drift_W = drift_at(W, Z, rho);
    c.diff2_W = cfg.kappa;
    c.drift_Z.resize(Z.size());
    for (std::size_t k = 0; k < Z.size(); ++k) c.drift_Z[k] = 2.0 / (Z[k] - W);
    return c;
}

SystemCoefficients metric_coefficients_rescaled(const PrevertexConfig& cfg, double W,
                                                std::span<const double> Z, int drift_sign) {
    double logmag = 0.0;
    for (std::size_t k = 0; k < Z.size(); ++k)
        logmag += cfg.betas[k] * std::log(std::abs(W - Z[k]));
    const double phi = std::exp(-logmag);
    const double phi2 = phi * phi;
    const double rescale = cfg.kappa * phi2;

    SystemCoefficients c;
    double drift = 0.0;
    for (std::size_t k = 0; k < Z.size(); ++k) drift += cfg.betas[k] / (W - Z[k]);
    c.drift_W = static_cast<double>(drift_sign) * drift / (2.0 * phi2) * rescale;
    c.diff2_W = (1.0 / phi2) * rescale;
    c.drift_Z.resize(Z.size());
    for (std::size_t k = 0; k < Z.size(); ++k)
        c.drift_Z[k] = 2.0 / (cfg.kappa * phi2 * (Z[k] - W)) * rescale;
    return c;
}

std::vector<double> brownian_increments(std::uint64_t seed, std::size_t steps, double dt) {
    Xoshiro256pp rng(seed);
    std::vector<double> out(steps);
    const double s = std::sqrt(dt);
    for (auto& v : out) v = s * rng.normal();
    return out;
}

} // namespace polysle
