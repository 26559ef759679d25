#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "contrakt/linalg.hpp"
#include "contrakt/mat.hpp"

namespace contrakt {

/// Control-affine system xdot = f(x) + g u with constant input matrix g,
/// an analytic Jacobian of f, and a default state-domain box.
struct SystemModel {
    std::size_t n = 0;
    std::size_t m = 0;
    std::function<Vec(const Vec&)> f;
    std::function<Mat(const Vec&)> jac_f;
    Mat g;
    Box domain;
    std::string name;
};

namespace pendulum_constants {
inline constexpr double grav = 9.81;
inline constexpr double mass = 0.15;
inline constexpr double length = 0.5;
inline constexpr double damping = 0.1;
inline constexpr double ml2 = mass * length * length;
} // namespace pendulum_constants

namespace detail {

/// sign = -1 gives the standard pendulum, +1 the inverted one. The ml^2
/// divisor of the input channel is absorbed into g, so xdot = f(x) + g u.
inline SystemModel make_pendulum(double sign, std::string name) {
    using namespace pendulum_constants;
    SystemModel s;
    s.n = 2;
    s.m = 1;
    s.name = std::move(name);
    s.f = [sign](const Vec& x) -> Vec {
        return {x[1], (sign * mass * grav * length * std::sin(x[0]) - damping * x[1]) / ml2};
    };
    s.jac_f = [sign](const Vec& x) -> Mat {
        return {{0.0, 1.0}, {sign * (grav / length) * std::cos(x[0]), -damping / ml2}};
    };
    s.g = Mat(2, 1);
    s.g(1, 0) = 1.0 / ml2;
    s.domain = Box{{-M_PI, -4.0}, {M_PI, 4.0}};
    return s;
}

} // namespace detail

inline SystemModel pendulum() { return detail::make_pendulum(-1.0, "pendulum"); }
inline SystemModel inverted_pendulum() { return detail::make_pendulum(+1.0, "inverted_pendulum"); }

/// Three-state single-input benchmark
///   f = (-x1 + x3, x1^2 - x2 - 2 x1 x3 + x3, -x2),  g = e3.
inline SystemModel andrieu3() {
    SystemModel s;
    s.n = 3;
    s.m = 1;
    s.name = "andrieu3";
    s.f = [](const Vec& x) -> Vec {
        return {-x[0] + x[2], x[0] * x[0] - x[1] - 2.0 * x[0] * x[2] + x[2], -x[1]};
    };
    s.jac_f = [](const Vec& x) -> Mat {
        return {{-1.0, 0.0, 1.0},
                {2.0 * x[0] - 2.0 * x[2], -1.0, -2.0 * x[0] + 1.0},
                {0.0, -1.0, 0.0}};
    };
    s.g = Mat(3, 1);
    s.g(2, 0) = 1.0;
    s.domain = Box{{-12.0, -12.0, -12.0}, {12.0, 12.0, 12.0}};
    return s;
}

inline SystemModel make_system(const std::string& name) {
    if (name == "pendulum") return pendulum();
    if (name == "inverted_pendulum") return inverted_pendulum();
    if (name == "andrieu3") return andrieu3();
    throw std::invalid_argument("unknown system: " + name);
}

/// Linear state feedback u(x) = -K x from the CARE solution at a
/// linearization point: K = R^{-1} B^T P with A = jac_f(x_lin), B = g.
struct LqrController {
    Mat K;
    Mat P;
    double care_residual = 0.0;

    [[nodiscard]] Vec operator()(const Vec& x) const { return -1.0 * (K * x); }
};

inline LqrController lqr_controller(const SystemModel& sys, const Vec& x_lin, const Mat& R,
                                    const Mat& Q) {
    CareResult care = solve_care(sys.jac_f(x_lin), sys.g, Q, R);
    return LqrController{care.K, care.P, care.residual};
}

/// Close an inner linear loop around the system: the returned model has
/// f'(x) = f(x) + g u_inner(x) and jac' = jac - g K, still control-affine in
/// the remaining (outer) input.
inline SystemModel prestabilize(const SystemModel& sys, const LqrController& inner) {
    SystemModel out = sys;
    out.name = sys.name + "+lqr";
    auto f0 = sys.f;
    auto j0 = sys.jac_f;
    Mat g = sys.g;
    Mat K = inner.K;
    out.f = [f0, g, K](const Vec& x) -> Vec { return f0(x) - g * (K * x); };
    out.jac_f = [j0, g, K](const Vec& x) -> Mat { return j0(x) - g * K; };
    return out;
}

} // namespace contrakt
