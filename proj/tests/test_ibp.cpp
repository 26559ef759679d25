#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <cmath>

#include "contrakt/ibp.hpp"
#include "contrakt/rng.hpp"

using namespace contrakt;

namespace {

MatrixBounds random_bounds(Rng& rng, std::size_t r, std::size_t c, double span = 2.0) {
    Mat lo(r, c), hi(r, c);
    for (std::size_t k = 0; k < lo.a.size(); ++k) {
        const double a = rng.uniform(-span, span), b = rng.uniform(-span, span);
        lo.a[k] = std::min(a, b);
        hi.a[k] = std::max(a, b);
    }
    return {lo, hi};
}

Mat sample_within(Rng& rng, const MatrixBounds& b) {
    Mat m(b.rows(), b.cols());
    for (std::size_t k = 0; k < m.a.size(); ++k) {
        const double t = rng.uniform();
        // mix corners and interior points
        m.a[k] = (t < 0.25) ? b.lo.a[k] : (t < 0.5) ? b.hi.a[k]
                                                    : rng.uniform(b.lo.a[k], b.hi.a[k]);
    }
    return m;
}

} // namespace

TEST_CASE("func1 identity and scalar cases") {
    Rng rng(1);
    MatrixBounds q = random_bounds(rng, 3, 3);
    MatrixBounds out = func1(q, Mat::identity(3));
    CHECK(max_abs(out.lo - q.lo) == 0.0);
    CHECK(max_abs(out.hi - q.hi) == 0.0);

    MatrixBounds s({Mat{{-1.0}}, Mat{{3.0}}});
    MatrixBounds p2 = func1(s, Mat{{2.0}});
    CHECK(p2.lo(0, 0) == -2.0);
    CHECK(p2.hi(0, 0) == 6.0);

    MatrixBounds pneg = func1(s, Mat{{-1.0}});
    CHECK(pneg.lo(0, 0) == -3.0);
    CHECK(pneg.hi(0, 0) == 1.0);

    CHECK_THROWS_AS(func1(q, Mat(3, 2)), std::invalid_argument);
}

TEST_CASE("func2 case table") {
    auto entry = [](double lo, double hi, double a, double b) {
        return func2(MatrixBounds(Mat{{lo}}, Mat{{hi}}), a, b);
    };
    MatrixBounds c1 = entry(2.0, 4.0, 0.3, 1.0);
    CHECK(c1.lo(0, 0) == Catch::Approx(0.6));
    CHECK(c1.hi(0, 0) == 4.0);
    MatrixBounds c3 = entry(-4.0, -2.0, 0.3, 1.0);
    CHECK(c3.lo(0, 0) == -4.0);
    CHECK(c3.hi(0, 0) == Catch::Approx(-0.6));
    MatrixBounds c2 = entry(-2.0, 4.0, 0.3, 1.0);
    CHECK(c2.lo(0, 0) == -2.0);
    CHECK(c2.hi(0, 0) == 4.0);

    CHECK_THROWS_AS(func2(MatrixBounds(Mat{{0.0}}, Mat{{1.0}}), 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("func3 exact on point intervals and the scalar mixed case") {
    Rng rng(2);
    Mat W(2, 3), P(3, 2);
    for (double& x : W.a) x = rng.uniform(-2, 2);
    for (double& x : P.a) x = rng.uniform(-2, 2);
    MatrixBounds out = func3(MatrixBounds::point(W), MatrixBounds::point(P));
    CHECK(max_abs(out.lo - W * P) < 1e-14);
    CHECK(max_abs(out.hi - W * P) < 1e-14);

    // w in [-1,2], p in [-3,1]: lo = min over corners = -6, hi = 3
    MatrixBounds s = func3(MatrixBounds(Mat{{-1.0}}, Mat{{2.0}}),
                           MatrixBounds(Mat{{-3.0}}, Mat{{1.0}}));
    CHECK(s.lo(0, 0) == -6.0);
    CHECK(s.hi(0, 0) == 3.0);

    // point identity on the left returns the right operand
    MatrixBounds p = random_bounds(rng, 3, 3);
    MatrixBounds idp = func3(MatrixBounds::point(Mat::identity(3)), p);
    CHECK(max_abs(idp.lo - p.lo) < 1e-14);
    CHECK(max_abs(idp.hi - p.hi) < 1e-14);
}

TEST_CASE("func3 equals exhaustive corner enumeration on dyadic scalars") {
    Rng rng(3);
    for (int k = 0; k < 10000; ++k) {
        auto dyadic = [&]() { return static_cast<double>(static_cast<int>(rng.next() % 33) - 16) / 8.0; };
        double lw = dyadic(), uw = dyadic(), lp = dyadic(), up = dyadic();
        if (lw > uw) std::swap(lw, uw);
        if (lp > up) std::swap(lp, up);
        MatrixBounds out = func3(MatrixBounds(Mat{{lw}}, Mat{{uw}}),
                                 MatrixBounds(Mat{{lp}}, Mat{{up}}));
        const double c[4] = {lw * lp, lw * up, uw * lp, uw * up};
        const double exact_lo = std::min({c[0], c[1], c[2], c[3]});
        const double exact_hi = std::max({c[0], c[1], c[2], c[3]});
        REQUIRE(out.lo(0, 0) == exact_lo); // exact arithmetic, tolerance 0
        REQUIRE(out.hi(0, 0) == exact_hi);
    }
}

TEST_CASE("jacobian_bounds on a one-layer identity network") {
    MlpParams p;
    p.alpha = 0.3;
    p.weights = {Mat::identity(2)};
    p.biases = {Vec(2, 0.0)};
    p.output_weight = Mat::identity(2);
    p.validate();
    MatrixBounds b = jacobian_bounds(p);
    CHECK(b.lo(0, 0) == Catch::Approx(0.3));
    CHECK(b.hi(0, 0) == 1.0);
    CHECK(b.lo(0, 1) == 0.0);
    CHECK(b.hi(0, 1) == 0.0);

    MlpParams z = p;
    z.weights[0] = Mat(2, 2);
    MatrixBounds zb = jacobian_bounds(z);
    CHECK(max_abs(zb.lo) == 0.0);
    CHECK(max_abs(zb.hi) == 0.0);
}

TEST_CASE("jacobian_bounds contain the exact jacobian (sampling soundness)") {
    Rng rng(4);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t n = 2 + rep % 3;
        MlpParams p = mlp_init(n, {12, 7}, 2, 0.15 + 0.02 * rep, rng.next());
        MatrixBounds b = jacobian_bounds(p);
        for (int k = 0; k < 1000; ++k) {
            Vec x(n);
            for (double& v : x) v = rng.uniform(-20, 20);
            CHECK(b.contains(mlp_input_jacobian(p, x), 1e-12));
        }
    }
}

TEST_CASE("interval ops are monotone in the inputs") {
    Rng rng(5);
    for (int k = 0; k < 200; ++k) {
        MatrixBounds inner = random_bounds(rng, 3, 3);
        MatrixBounds outer = inner;
        for (std::size_t i = 0; i < outer.lo.a.size(); ++i) {
            outer.lo.a[i] -= rng.uniform(0, 0.5);
            outer.hi.a[i] += rng.uniform(0, 0.5);
        }
        Mat W(2, 3);
        for (double& x : W.a) x = rng.uniform(-2, 2);
        MatrixBounds f1i = func1(inner, W), f1o = func1(outer, W);
        for (std::size_t i = 0; i < f1i.lo.a.size(); ++i) {
            CHECK(f1o.lo.a[i] <= f1i.lo.a[i] + 1e-12);
            CHECK(f1o.hi.a[i] >= f1i.hi.a[i] - 1e-12);
        }
        MatrixBounds f2i = func2(inner, 0.3, 1.0), f2o = func2(outer, 0.3, 1.0);
        for (std::size_t i = 0; i < f2i.lo.a.size(); ++i) {
            CHECK(f2o.lo.a[i] <= f2i.lo.a[i] + 1e-12);
            CHECK(f2o.hi.a[i] >= f2i.hi.a[i] - 1e-12);
        }
        MatrixBounds w = random_bounds(rng, 2, 3);
        MatrixBounds f3i = func3(w, inner), f3o = func3(w, outer);
        for (std::size_t i = 0; i < f3i.lo.a.size(); ++i) {
            CHECK(f3o.lo.a[i] <= f3i.lo.a[i] + 1e-12);
            CHECK(f3o.hi.a[i] >= f3i.hi.a[i] - 1e-12);
        }
    }
}

TEST_CASE("func1/func3 soundness under random realizations") {
    Rng rng(6);
    for (int k = 0; k < 500; ++k) {
        MatrixBounds q = random_bounds(rng, 3, 2);
        Mat W(2, 3);
        for (double& x : W.a) x = rng.uniform(-2, 2);
        MatrixBounds out1 = func1(q, W);
        MatrixBounds w = random_bounds(rng, 2, 3);
        MatrixBounds out3 = func3(w, q);
        for (int s = 0; s < 20; ++s) {
            Mat Q = sample_within(rng, q);
            CHECK(out1.contains(W * Q, 1e-12));
            Mat Ws = sample_within(rng, w);
            CHECK(out3.contains(Ws * Q, 1e-12));
        }
    }
}

TEST_CASE("theorem2_lhs_bounds composition and soundness") {
    // M = I (point), Mdot = 0, g = [0,1]^T: the jacobian bounds of the tiny
    // net appear in row 2 of the result.
    MlpParams p;
    p.alpha = 0.3;
    p.weights = {Mat{{0.5, -0.2}, {0.1, 0.4}}};
    p.biases = {Vec(2, 0.1)};
    p.output_weight = Mat{{0.3, -0.7}};
    p.validate();
    Mat g(2, 1);
    g(1, 0) = 1.0;
    MatrixBounds mb = MatrixBounds::point(Mat::identity(2));
    MatrixBounds mdb = MatrixBounds::point(Mat(2, 2));
    MatrixBounds lhs = theorem2_lhs_bounds(mb, g, p, mdb);
    MatrixBounds jb = jacobian_bounds(p);
    CHECK(lhs.lo(0, 0) == 0.0);
    CHECK(lhs.hi(0, 1) == 0.0);
    CHECK(lhs.lo(1, 0) == Catch::Approx(jb.lo(0, 0)));
    CHECK(lhs.hi(1, 1) == Catch::Approx(jb.hi(0, 1)));

    // zero controller weights: controller term vanishes entirely
    MlpParams z = p;
    z.weights[0] = Mat(2, 2);
    z.output_weight = Mat(1, 2);
    MatrixBounds zero_lhs = theorem2_lhs_bounds(mb, g, z, mdb);
    CHECK(max_abs(zero_lhs.lo) == 0.0);
    CHECK(max_abs(zero_lhs.hi) == 0.0);

    // sampled soundness with a non-trivial metric interval
    Rng rng(7);
    for (int rep = 0; rep < 10; ++rep) {
        MlpParams q = mlp_init(2, {8}, 1, 0.3, rng.next());
        MatrixBounds mrand = random_bounds(rng, 2, 2, 1.0);
        MatrixBounds lhs2 = theorem2_lhs_bounds(mrand, g, q, mdb);
        for (int s = 0; s < 500; ++s) {
            Vec x = {rng.uniform(-5, 5), rng.uniform(-5, 5)};
            Mat M = sample_within(rng, mrand);
            Mat val = M * (g * mlp_input_jacobian(q, x));
            CHECK(lhs2.contains(val, 1e-10));
        }
    }
}

TEST_CASE("jacobian_bounds cost grows linearly with depth") {
    Rng rng(8);
    auto time_net = [&](std::size_t layers) {
        std::vector<std::size_t> hidden(layers, 64);
        MlpParams p = mlp_init(8, hidden, 8, 0.3, 99);
        // warm-up
        jacobian_bounds(p);
        const auto t0 = std::chrono::steady_clock::now();
        for (int k = 0; k < 400; ++k) jacobian_bounds(p);
        const auto t1 = std::chrono::steady_clock::now();
        return std::chrono::duration<double>(t1 - t0).count();
    };
    double ratio = 0.0;
    for (int attempt = 0; attempt < 5; ++attempt) {
        const double t4 = time_net(4), t8 = time_net(8);
        ratio = t8 / t4;
        if (ratio >= 1.5 && ratio <= 3.0) break;
    }
    CHECK(ratio >= 1.5);
    CHECK(ratio <= 3.0);
}
