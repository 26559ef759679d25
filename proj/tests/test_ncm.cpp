#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "contrakt/ncm.hpp"
#include "contrakt/rng.hpp"
#include "contrakt/systems.hpp"

using namespace contrakt;

namespace {

NcmParams random_ncm(NcmMode mode, const Mat& g, std::uint64_t seed) {
    if (mode == NcmMode::log_cosh) return ncm_log_cosh(g, 0.1, seed);
    return ncm_general(g, 0.1, 4, seed);
}

} // namespace

TEST_CASE("identity mode evaluates to I with zero gradients and mdot") {
    SystemModel sys = pendulum();
    NcmParams p = ncm_identity(2);
    Vec x{0.3, -1.0};
    CHECK(max_abs(ncm_eval(p, x) - Mat::identity(2)) == 0.0);
    CHECK(max_abs(ncm_grad(p, x)) == 0.0);
    CHECK(max_abs(mdot_eval(p, sys, x, Vec{0.5})) == 0.0);
    MatrixBounds mb = ncm_bounds(p, sys.domain, 0.5);
    CHECK(max_abs(mb.lo - Mat::identity(2)) == 0.0);
    CHECK(max_abs(mb.hi - Mat::identity(2)) == 0.0);
    MatrixBounds db = mdot_bounds(p, sys, sys.domain, 0.5);
    CHECK(max_abs(db.lo) == 0.0);
    CHECK(max_abs(db.hi) == 0.0);
}

TEST_CASE("log_cosh mode with zero gamma gives eps * I") {
    SystemModel sys = pendulum();
    NcmParams p = ncm_log_cosh(sys.g, 0.1, 42);
    p.gamma = Mat(2, 2);
    Vec x{1.0, 2.0};
    Mat M = ncm_eval(p, x);
    CHECK(max_abs(M - 0.1 * Mat::identity(2)) < 1e-15);
}

TEST_CASE("positive definiteness by construction") {
    SystemModel sys = pendulum();
    Rng rng(9);
    for (int k = 0; k < 250; ++k) {
        NcmParams p = random_ncm(k % 2 ? NcmMode::log_cosh : NcmMode::general, sys.g, rng.next());
        Vec x = rng.in_box(sys.domain);
        Mat M = ncm_eval(p, x);
        CHECK(max_abs(M - transpose(M)) < 1e-12);
        CHECK(sym_eig_min(M) >= p.epsilon - 1e-12);
        CHECK(sym_eig_max(-1.0 * M) <= -p.epsilon + 1e-12);
    }
}

TEST_CASE("entry gradients match finite differences") {
    SystemModel sys = andrieu3();
    Rng rng(10);
    for (int k = 0; k < 200; ++k) {
        NcmParams p = random_ncm(k % 2 ? NcmMode::log_cosh : NcmMode::general, sys.g, rng.next());
        Vec x = rng.in_box(Box{{-2, -2, -2}, {2, 2, 2}});
        Mat G = ncm_grad(p, x);
        const double h = 1e-6;
        for (std::size_t d = 0; d < 3; ++d) {
            Vec xp = x, xm = x;
            xp[d] += h;
            xm[d] -= h;
            Mat Mp = ncm_eval(p, xp), Mm = ncm_eval(p, xm);
            for (std::size_t i = 0; i < 3; ++i)
                for (std::size_t j = 0; j < 3; ++j) {
                    const double fd = (Mp(i, j) - Mm(i, j)) / (2 * h);
                    CHECK(std::abs(G(i * 3 + j, d) - fd) < 1e-6);
                }
        }
    }
}

TEST_CASE("PDE residual vanishes: gradient rows annihilate g") {
    for (const SystemModel& sys : {pendulum(), andrieu3()}) {
        Rng rng(11);
        for (int k = 0; k < 100; ++k) {
            NcmParams p = random_ncm(k % 2 ? NcmMode::log_cosh : NcmMode::general, sys.g, rng.next());
            Vec x = rng.in_box(sys.domain);
            Mat G = ncm_grad(p, x);
            for (std::size_t row = 0; row < G.rows; ++row)
                for (std::size_t c = 0; c < sys.g.cols; ++c) {
                    double s = 0.0;
                    for (std::size_t d = 0; d < sys.n; ++d) s += G(row, d) * sys.g(d, c);
                    CHECK(std::abs(s) < 1e-8);
                }
        }
    }
}

TEST_CASE("mdot is independent of the control input") {
    SystemModel sys = pendulum();
    Rng rng(12);
    for (int k = 0; k < 100; ++k) {
        NcmParams p = random_ncm(k % 2 ? NcmMode::log_cosh : NcmMode::general, sys.g, rng.next());
        Vec x = rng.in_box(sys.domain);
        Mat a = mdot_eval(p, sys, x, Vec{0.0});
        Mat b = mdot_eval(p, sys, x, Vec{100.0});
        CHECK(max_abs(a - b) < 1e-8);
    }
}

TEST_CASE("mdot matches the time derivative of M along the flow") {
    SystemModel sys = pendulum();
    Rng rng(13);
    for (int k = 0; k < 30; ++k) {
        NcmParams p = random_ncm(k % 2 ? NcmMode::log_cosh : NcmMode::general, sys.g, rng.next());
        Vec x = rng.in_box(Box{{-2, -2}, {2, 2}});
        const Vec u{rng.uniform(-1, 1)};
        auto rhs = [&](const Vec& z) { return sys.f(z) + sys.g * u; };
        auto rk4 = [&](Vec z, double dt) {
            Vec k1 = rhs(z), k2 = rhs(z + 0.5 * dt * k1), k3 = rhs(z + 0.5 * dt * k2),
                k4 = rhs(z + dt * k3);
            return z + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        };
        const double h = 1e-4;
        Mat Mp = ncm_eval(p, rk4(x, h)), Mm = ncm_eval(p, rk4(x, -h));
        Mat fd = (1.0 / (2 * h)) * (Mp - Mm);
        CHECK(max_abs(mdot_eval(p, sys, x, u) - fd) < 1e-5);
    }
}

TEST_CASE("grid bounds contain random-sample evaluations") {
    SystemModel sys = pendulum();
    NcmParams p = ncm_log_cosh(sys.g, 0.1, 77);
    const Box box{{-1.5, -2.0}, {1.5, 2.0}};
    MatrixBounds mb = ncm_bounds(p, box, 0.1);
    MatrixBounds db = mdot_bounds(p, sys, box, 0.1);
    Rng rng(14);
    for (int k = 0; k < 2000; ++k) {
        Vec x = rng.in_box(box);
        CHECK(mb.contains(ncm_eval(p, x), 1e-12));
        CHECK(db.contains(mdot_eval(p, sys, x, Vec{0.0}), 1e-12));
    }
}

TEST_CASE("halving the grid spacing never loosens the metric bounds") {
    SystemModel sys = pendulum();
    NcmParams p = ncm_log_cosh(sys.g, 0.1, 5);
    for (double& x : p.gamma.a) x = 1.0;
    const Box box{{-1.0, -1.0}, {1.0, 1.0}};
    MatrixBounds coarse = ncm_bounds(p, box, 0.2);
    MatrixBounds fine = ncm_bounds(p, box, 0.1);
    for (std::size_t k = 0; k < coarse.lo.a.size(); ++k) {
        CHECK(fine.lo.a[k] >= coarse.lo.a[k] - 1e-12);
        CHECK(fine.hi.a[k] <= coarse.hi.a[k] + 1e-12);
    }
}

TEST_CASE("degenerate boxes are rejected") {
    SystemModel sys = pendulum();
    NcmParams lc = ncm_log_cosh(sys.g, 0.1, 3);
    CHECK_THROWS_AS(ncm_bounds(lc, Box{{0.0, 0.0}, {0.0, 1.0}}, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(ncm_bounds(lc, Box{{}, {}}, 0.1), std::invalid_argument);
}

TEST_CASE("composed bounds contain sampled Mdot + M g du/dx realizations") {
    SystemModel sys = pendulum();
    const Box box{{-1.0, -1.0}, {1.0, 1.0}};
    Rng rng(15);
    for (int rep = 0; rep < 5; ++rep) {
        NcmParams ncm = rep % 2 ? ncm_log_cosh(sys.g, 0.1, rng.next())
                                : ncm_general(sys.g, 0.1, 4, rng.next());
        MlpParams ctrl = mlp_init(2, {8}, 1, 0.3, rng.next());
        MatrixBounds mb = ncm_bounds(ncm, box, 0.1);
        MatrixBounds db = mdot_bounds(ncm, sys, box, 0.1);
        MatrixBounds lhs = theorem2_lhs_bounds(mb, sys.g, ctrl, db);
        for (int k = 0; k < 500; ++k) {
            Vec x = rng.in_box(box);
            Mat val = mdot_eval(ncm, sys, x, mlp_forward(ctrl, x)) +
                      ncm_eval(ncm, x) * (sys.g * mlp_input_jacobian(ctrl, x));
            CHECK(lhs.contains(val, 1e-10));
        }
    }
}

TEST_CASE("kernel basis construction is checked against g") {
    SystemModel sys = andrieu3();
    NcmParams p = ncm_log_cosh(sys.g, 0.1, 21);
    CHECK(p.r() == 2);
    CHECK_NOTHROW(p.validate(sys.g));
    NcmParams bad = p;
    bad.kernel_basis[0] = Vec{0.0, 0.0, 1.0}; // does not annihilate g = e3
    CHECK_THROWS_AS(bad.validate(sys.g), std::invalid_argument);
}
