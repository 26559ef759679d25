#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "contrakt/mat.hpp"
#include "contrakt/rng.hpp"
#include "contrakt/systems.hpp"

namespace contrakt {

using Controller = std::function<Vec(const Vec&)>;

/// Closed-loop trajectory sampled on a uniform time grid. If the state blows
/// up the rollout stops early and `truncated` is set.
struct Trajectory {
    std::vector<double> times;
    std::vector<Vec> states;
    std::vector<Vec> controls;
    bool truncated = false;
};

/// Classical RK4 with the controller re-evaluated at every stage state.
/// Truncates (with flag) once ||x|| > 1e6 or the dynamics go non-finite.
inline Trajectory rollout(const SystemModel& sys, const Controller& controller, const Vec& x0,
                          double T, double dt) {
    if (!(dt > 0.0) || !(T >= dt)) throw std::invalid_argument("rollout: need dt > 0, T >= dt");
    constexpr double divergence_threshold = 1e6;
    const auto steps = static_cast<std::size_t>(std::llround(T / dt));
    auto rhs = [&](const Vec& x) { return sys.f(x) + sys.g * controller(x); };

    Trajectory tr;
    Vec x = x0;
    tr.times.push_back(0.0);
    tr.states.push_back(x);
    tr.controls.push_back(controller(x));
    for (std::size_t s = 1; s <= steps; ++s) {
        const Vec k1 = rhs(x);
        const Vec k2 = rhs(x + (0.5 * dt) * k1);
        const Vec k3 = rhs(x + (0.5 * dt) * k2);
        const Vec k4 = rhs(x + dt * k3);
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!all_finite(x) || norm2(x) > divergence_threshold) {
            tr.truncated = true;
            break;
        }
        tr.times.push_back(static_cast<double>(s) * dt);
        tr.states.push_back(x);
        tr.controls.push_back(controller(x));
    }
    return tr;
}

/// Empirical contraction rate: the negated least-squares slope of
/// log ||x(t) - x*|| over the window [t0, t1].
inline double estimate_rate(const Trajectory& tr, const Vec& x_star, double t0, double t1) {
    if (!(t0 < t1)) throw std::invalid_argument("estimate_rate: degenerate window");
    if (tr.times.empty() || tr.times.back() < t1)
        throw std::invalid_argument("estimate_rate: trajectory does not cover the window");
    double sum_t = 0.0, sum_y = 0.0, sum_tt = 0.0, sum_ty = 0.0;
    std::size_t count = 0;
    bool checked_start = false;
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
        const double t = tr.times[i];
        if (t < t0 || t > t1) continue;
        const double d = norm2(tr.states[i] - x_star);
        if (!checked_start) {
            if (d <= 1e-9)
                throw std::invalid_argument("estimate_rate: trajectory already at x* at t0");
            checked_start = true;
        }
        const double y = std::log(std::max(d, 1e-300));
        sum_t += t;
        sum_y += y;
        sum_tt += t * t;
        sum_ty += t * y;
        ++count;
    }
    if (count < 2) throw std::invalid_argument("estimate_rate: window holds fewer than 2 samples");
    const double denom = static_cast<double>(count) * sum_tt - sum_t * sum_t;
    if (denom <= 0.0) throw std::invalid_argument("estimate_rate: degenerate window");
    return -(static_cast<double>(count) * sum_ty - sum_t * sum_y) / denom;
}

/// Independent seeded rollouts from initial states uniform in the ball of the
/// given radius around x_star.
inline std::vector<Trajectory> batch_rollouts(const SystemModel& sys, const Controller& controller,
                                              const Vec& x_star, std::size_t n_init, double radius,
                                              std::uint64_t seed, double T, double dt) {
    if (n_init < 1) throw std::invalid_argument("batch_rollouts: n_init must be >= 1");
    Rng rng(seed);
    std::vector<Trajectory> out;
    out.reserve(n_init);
    for (std::size_t i = 0; i < n_init; ++i)
        out.push_back(rollout(sys, controller, rng.ball(x_star, radius), T, dt));
    return out;
}

namespace detail {

/// Shortest round-trip decimal for a double.
inline std::string fmt_double(double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, p);
}

inline std::string fmt_fixed(double v, int prec = 3) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
    return std::string(buf);
}

} // namespace detail

/// CSV emission: header row, '.' decimal separator, one data row per sample:
/// time, x1..xn, u1..um, traj_id.
inline void emit_csv(const std::vector<Trajectory>& trajs, const std::string& path) {
    if (trajs.empty()) throw std::invalid_argument("emit_csv: no trajectories");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("emit_csv: cannot open " + path);
    const std::size_t n = trajs.front().states.front().size();
    const std::size_t m = trajs.front().controls.front().size();
    out << "time";
    for (std::size_t i = 1; i <= n; ++i) out << ",x" << i;
    for (std::size_t i = 1; i <= m; ++i) out << ",u" << i;
    out << ",traj_id\r\n";
    for (std::size_t id = 0; id < trajs.size(); ++id) {
        const Trajectory& tr = trajs[id];
        for (std::size_t s = 0; s < tr.times.size(); ++s) {
            out << detail::fmt_double(tr.times[s]);
            for (double v : tr.states[s]) out << ',' << detail::fmt_double(v);
            for (double v : tr.controls[s]) out << ',' << detail::fmt_double(v);
            out << ',' << id << "\r\n";
        }
    }
    if (!out) throw std::runtime_error("emit_csv: write failed for " + path);
}

/// Axis selector for plots: "t", "x1".."xn" or "u1".."um".
inline double series_value(const Trajectory& tr, const std::string& axis, std::size_t s) {
    if (axis == "t") return tr.times[s];
    if (axis.size() >= 2 && (axis[0] == 'x' || axis[0] == 'u')) {
        const std::size_t idx = std::stoul(axis.substr(1));
        const auto& vecs = (axis[0] == 'x') ? tr.states : tr.controls;
        if (idx >= 1 && idx <= vecs[s].size()) return vecs[s][idx - 1];
    }
    throw std::invalid_argument("unknown plot axis: " + axis);
}

/// Standalone SVG 1.1 line plot, one polyline path per trajectory, axis
/// labels, viewBox normalized to the data extents. Byte-deterministic for
/// fixed input.
inline void emit_svg(const std::vector<Trajectory>& trajs, const std::string& x_axis,
                     const std::string& y_axis, const std::string& path) {
    if (trajs.empty()) throw std::invalid_argument("emit_svg: no trajectories");
    if (x_axis.empty() || y_axis.empty()) throw std::invalid_argument("emit_svg: empty axes");

    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const Trajectory& tr : trajs)
        for (std::size_t s = 0; s < tr.times.size(); ++s) {
            const double x = series_value(tr, x_axis, s);
            const double y = series_value(tr, y_axis, s);
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    if (xmax - xmin < 1e-12) xmax = xmin + 1e-12;
    if (ymax - ymin < 1e-12) ymax = ymin + 1e-12;

    const double W = 1000.0, H = 700.0, pad = 60.0;
    auto px = [&](double x) { return pad + (x - xmin) / (xmax - xmin) * (W - 2 * pad); };
    auto py = [&](double y) { return H - pad - (y - ymin) / (ymax - ymin) * (H - 2 * pad); };

    static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("emit_svg: cannot open " + path);
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" viewBox=\"0 0 " << W << " "
        << H << "\">\n"
        << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n"
        << "<line x1=\"" << pad << "\" y1=\"" << H - pad << "\" x2=\"" << W - pad << "\" y2=\""
        << H - pad << "\" stroke=\"black\"/>\n"
        << "<line x1=\"" << pad << "\" y1=\"" << pad << "\" x2=\"" << pad << "\" y2=\"" << H - pad
        << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << W / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">" << x_axis
        << "</text>\n"
        << "<text x=\"18\" y=\"" << H / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
        << H / 2 << ")\">" << y_axis << "</text>\n"
        << "<text x=\"" << pad << "\" y=\"" << H - pad + 20 << "\" text-anchor=\"middle\">"
        << detail::fmt_fixed(xmin) << "</text>\n"
        << "<text x=\"" << W - pad << "\" y=\"" << H - pad + 20 << "\" text-anchor=\"middle\">"
        << detail::fmt_fixed(xmax) << "</text>\n"
        << "<text x=\"" << pad - 8 << "\" y=\"" << H - pad << "\" text-anchor=\"end\">"
        << detail::fmt_fixed(ymin) << "</text>\n"
        << "<text x=\"" << pad - 8 << "\" y=\"" << pad + 5 << "\" text-anchor=\"end\">"
        << detail::fmt_fixed(ymax) << "</text>\n";
    for (std::size_t id = 0; id < trajs.size(); ++id) {
        const Trajectory& tr = trajs[id];
        out << "<polyline fill=\"none\" stroke=\"" << palette[id % 10]
            << "\" stroke-width=\"1.2\" points=\"";
        for (std::size_t s = 0; s < tr.times.size(); ++s) {
            if (s) out << ' ';
            out << detail::fmt_fixed(px(series_value(tr, x_axis, s)), 2) << ','
                << detail::fmt_fixed(py(series_value(tr, y_axis, s)), 2);
        }
        out << "\"/>\n";
    }
    out << "</svg>\n";
    if (!out) throw std::runtime_error("emit_svg: write failed for " + path);
}

} // namespace contrakt
