#include "polysle/loewner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "polysle/rng.hpp"

namespace polysle {

namespace {

struct FlowStage {
    cplx dg;
    cplx dgp;
};

FlowStage flow_field(cplx g, cplx gp, double W, bool want_deriv) {
    const cplx den = g - W;
    FlowStage s;
    s.dg = 2.0 / den;
    s.dgp = want_deriv ? -2.0 * gp / (den * den) : cplx{0.0, 0.0};
    return s;
}

} // namespace

FlowResult flow_point(const DrivingPath& path, cplx z, const FlowOptions& opt) {
    if (path.states.size() < 2) throw SimulationError("flow_point: path too short");
    if (z.imag() < 0.0) throw SimulationError("flow_point: point below the real axis");

    const double dt = path.dt;
    const double t_end = opt.t_end >= 0.0 ? std::min(opt.t_end, path.end_time())
                                          : path.end_time();
    const double eps = opt.eps_swallow_factor * std::sqrt(4.0 * dt);

    FlowResult res;
    res.point = z;
    res.times.push_back(0.0);
    res.trajectory.push_back(z);
    if (opt.want_deriv) res.deriv_trajectory.push_back({1.0, 0.0});

    cplx g = z;
    cplx gp{1.0, 0.0};

    if (std::abs(z - path.states.front().W) <= eps) {
        res.swallow_time = 0.0;
        return res;
    }

    const std::size_t cells =
        std::min(path.steps(), static_cast<std::size_t>(std::llround(t_end / dt)));
    for (std::size_t j = 0; j < cells; ++j) {
        const double t0 = path.states[j].t;
        const double W0 = path.states[j].W;
        const double W1 = path.states[j + 1].W;
        double local = 0.0;
        bool swallowed = false;
        while (local < dt) {
            const double Wl = W0 + (local / dt) * (W1 - W0);
            const double dist = std::abs(g - Wl);
            if (dist <= eps) {
                res.swallow_time = t0 + local;
                swallowed = true;
                break;
            }
            // |dg| ~ 2h/dist stays below 0.1*dist
            double h = std::min(dt - local, 0.05 * dist * dist);
            if (h <= 0.0) h = dt - local;
            auto Wat = [&](double s) { return W0 + (s / dt) * (W1 - W0); };
            const double Wm = Wat(local + 0.5 * h);
            const double We = Wat(local + h);
            const FlowStage k1 = flow_field(g, gp, Wl, opt.want_deriv);
            const FlowStage k2 =
                flow_field(g + 0.5 * h * k1.dg, gp + 0.5 * h * k1.dgp, Wm, opt.want_deriv);
            const FlowStage k3 =
                flow_field(g + 0.5 * h * k2.dg, gp + 0.5 * h * k2.dgp, Wm, opt.want_deriv);
            const FlowStage k4 = flow_field(g + h * k3.dg, gp + h * k3.dgp, We, opt.want_deriv);
            g += h / 6.0 * (k1.dg + 2.0 * k2.dg + 2.0 * k3.dg + k4.dg);
            if (opt.want_deriv)
                gp += h / 6.0 * (k1.dgp + 2.0 * k2.dgp + 2.0 * k3.dgp + k4.dgp);
            if (g.imag() < 0.0) g = {g.real(), 0.0}; // boundary points stay on the axis
            local += h;
        }
        if (swallowed) break;
        if ((j + 1) % static_cast<std::size_t>(opt.sample_stride) == 0 || j + 1 == cells) {
            res.times.push_back(path.states[j + 1].t);
            res.trajectory.push_back(g);
            if (opt.want_deriv) res.deriv_trajectory.push_back(gp);
        }
    }
    return res;
}

namespace {

// Distance process of a boundary point: X = |g - W| > 0 evolves by
// dX = 2 dt / X - s * dW with s = +1 right of the driver, -1 left.
// Substeps halve (with proportional increment splitting) while a move
// exceeds a quarter of the current distance. Returns the in-step time at
// which X crossed the swallow threshold, or a negative value.
double advance_distance(double& X, double h, double dW, double eps, int depth) {
    const double dX = 2.0 * h / X - dW;
    if (std::abs(dX) > 0.25 * X && depth < 26) {
        const double first = advance_distance(X, 0.5 * h, 0.5 * dW, eps, depth + 1);
        if (first >= 0.0) return first;
        const double second = advance_distance(X, 0.5 * h, 0.5 * dW, eps, depth + 1);
        return second >= 0.0 ? 0.5 * h + second : -1.0;
    }
    X += dX;
    if (X <= eps) {
        X = std::max(X, 0.0);
        return h;
    }
    return -1.0;
}

struct TwoPointState {
    double XR; // g_t(x) - W_t
    double XL; // W_t - g_t(-y)
    std::optional<double> t_right;
    std::optional<double> t_left;
};

void advance_two_points(TwoPointState& s, double dt, double dW, double eps, double t0) {
    if (!s.t_right) {
        const double hit = advance_distance(s.XR, dt, dW, eps, 0);
        if (hit >= 0.0) s.t_right = t0 + hit;
    }
    if (!s.t_left) {
        const double hit = advance_distance(s.XL, dt, -dW, eps, 0);
        if (hit >= 0.0) s.t_left = t0 + hit;
    }
}

SwallowLabel label_from(const TwoPointState& s, double* t_left, double* t_right) {
    if (t_left) *t_left = s.t_left.value_or(-1.0);
    if (t_right) *t_right = s.t_right.value_or(-1.0);
    if (s.t_left && (!s.t_right || *s.t_left <= *s.t_right)) return SwallowLabel::LeftFirst;
    if (s.t_right) return SwallowLabel::RightFirst;
    return SwallowLabel::Neither;
}

} // namespace

SwallowLabel swallow_order(const DrivingPath& path, double x, double y, double* t_left,
                           double* t_right) {
    if (!(x > 0.0) || !(y > 0.0)) throw SimulationError("swallow_order needs x, y > 0");
    const double eps = std::sqrt(4.0 * path.dt);
    TwoPointState s{x, y, std::nullopt, std::nullopt};
    for (std::size_t j = 0; j + 1 < path.states.size(); ++j) {
        const double dW = path.states[j + 1].W - path.states[j].W;
        advance_two_points(s, path.dt, dW, eps, path.states[j].t);
        if (s.t_left && s.t_right) break;
        if (s.t_left && s.t_right) break;
    }
    return label_from(s, t_left, t_right);
}

SwallowLabel swallow_order_streaming(double kappa, double x, double y, double dt, double t_max,
                                     std::uint64_t seed, double* t_decided) {
    if (!(x > 0.0) || !(y > 0.0)) throw SimulationError("swallow_order needs x, y > 0");
    const double eps = std::sqrt(4.0 * dt);
    const double sqrt_k = std::sqrt(kappa);
    const double sqrt_dt = std::sqrt(dt);
    Xoshiro256pp rng(seed);
    TwoPointState s{x, y, std::nullopt, std::nullopt};
    const auto steps = static_cast<std::size_t>(std::llround(t_max / dt));
    double Bsum = 0.0;
    double Wprev = 0.0;
    for (std::size_t j = 0; j < steps; ++j) {
        Bsum += sqrt_dt * rng.normal();
        const double W = sqrt_k * Bsum; // same accumulation as the path simulator
        advance_two_points(s, dt, W - Wprev, eps, static_cast<double>(j) * dt);
        Wprev = W;
        if (s.t_left || s.t_right) break; // order decided by the first swallow
    }
    if (t_decided) {
        if (s.t_left || s.t_right)
            *t_decided = s.t_left ? (s.t_right ? std::min(*s.t_left, *s.t_right) : *s.t_left)
                                  : *s.t_right;
        else
            *t_decided = -1.0;
    }
    return label_from(s, nullptr, nullptr);
}

TraceSample compute_trace(const DrivingPath& path, int stride) {
    if (path.states.empty()) throw SimulationError("compute_trace: empty path");
    if (stride < 1) stride = 1;
    TraceSample out;
    out.times.push_back(0.0);
    out.points.push_back({path.states.front().W, 0.0});
    const double dt = path.dt;
    for (std::size_t k = stride; k < path.states.size();
         k += static_cast<std::size_t>(stride)) {
        cplx w = {path.states[k].W, 0.0};
        for (std::size_t j = k; j >= 1; --j) {
            const double Wj = path.states[j - 1].W; // driver held at the step start
            const cplx d = w - Wj;
            w = Wj + sqrt_uhp(d * d - 4.0 * dt);
            if (w.imag() < -1e-9)
                throw SimulationError("compute_trace: branch failure at step " +
                                      std::to_string(j));
        }
        out.times.push_back(path.states[k].t);
        out.points.push_back(w);
    }
    return out;
}

} // namespace polysle
