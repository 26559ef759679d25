#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "contrakt/linalg.hpp"
#include "contrakt/rng.hpp"

using namespace contrakt;

TEST_CASE("sym_eig_max on identity and diagonal") {
    CHECK(sym_eig_max(Mat::identity(3)) == Catch::Approx(1.0).margin(1e-12));
    Mat D{{1, 0, 0}, {0, 2, 0}, {0, 0, 3}};
    CHECK(sym_eig_max(D) == Catch::Approx(3.0).margin(1e-12));
    SymEigResult full = sym_eig(D);
    REQUIRE(full.eigenvalues.size() == 3);
    CHECK(full.eigenvalues[0] == Catch::Approx(1.0).margin(1e-12));
    CHECK(full.eigenvalues[1] == Catch::Approx(2.0).margin(1e-12));
    CHECK(full.max == full.eigenvalues.back());
}

TEST_CASE("sym_eig_max matches the 2x2 closed form") {
    Rng rng(11);
    for (int k = 0; k < 50; ++k) {
        const double a = rng.uniform(-5, 5), b = rng.uniform(-5, 5), c = rng.uniform(-5, 5);
        Mat A{{a, b}, {b, c}};
        const double lam = 0.5 * (a + c) + std::sqrt(0.25 * (a - c) * (a - c) + b * b);
        CHECK(sym_eig_max(A) == Catch::Approx(lam).margin(1e-10));
    }
}

TEST_CASE("sym_eig rejects non-square input") {
    CHECK_THROWS_AS(sym_eig_max(Mat(2, 3)), std::invalid_argument);
}

TEST_CASE("spectral shift property") {
    Rng rng(5);
    for (int k = 0; k < 30; ++k) {
        Mat A(4, 4);
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = i; j < 4; ++j) A(i, j) = A(j, i) = rng.uniform(-3, 3);
        const double t = rng.uniform(-10, 10);
        Mat B = A + t * Mat::identity(4);
        CHECK(std::abs(sym_eig_max(A) - sym_eig_max(B) + t) < 1e-10);
    }
}

TEST_CASE("null_space_basis on axis-aligned inputs") {
    Mat g(3, 1);
    g(2, 0) = 1.0;
    auto basis = null_space_basis(g);
    REQUIRE(basis.size() == 2);
    CHECK(basis[0] == Vec{1, 0, 0});
    CHECK(basis[1] == Vec{0, 1, 0});

    Mat e1(2, 1);
    e1(0, 0) = 1.0;
    auto b2 = null_space_basis(e1);
    REQUIRE(b2.size() == 1);
    CHECK(b2[0] == Vec{0, 1});

    CHECK(null_space_basis(Mat::identity(3)).empty());
}

TEST_CASE("null_space_basis orthogonality on random inputs") {
    Rng rng(77);
    for (int k = 0; k < 500; ++k) {
        const std::size_t n = 2 + k % 4;                  // 2..5
        const std::size_t m = 1 + k % std::min<std::size_t>(n, 3);
        Mat g(n, m);
        for (double& x : g.a) x = rng.uniform(-2, 2);
        auto basis = null_space_basis(g);
        for (std::size_t i = 0; i < basis.size(); ++i) {
            CHECK(std::abs(norm2(basis[i]) - 1.0) < 1e-10);
            for (std::size_t j = i + 1; j < basis.size(); ++j)
                CHECK(std::abs(dot(basis[i], basis[j])) < 1e-10);
            for (std::size_t c = 0; c < m; ++c) {
                double s = 0.0;
                for (std::size_t r = 0; r < n; ++r) s += basis[i][r] * g(r, c);
                CHECK(std::abs(s) < 1e-10);
            }
        }
    }
}

TEST_CASE("null_space rank on a random rank-2 4x2 matrix") {
    Rng rng(3);
    Mat g(4, 2);
    for (double& x : g.a) x = rng.uniform(-1, 1);
    auto basis = null_space_basis(g); // full column rank almost surely
    CHECK(basis.size() == 2);
}

TEST_CASE("solve_lyapunov residual") {
    Mat A{{-1, 0.5}, {0, -2}};
    Mat C{{-1, 0}, {0, -1}};
    Mat X = solve_lyapunov(A, C);
    CHECK(max_abs(transpose(A) * X + X * A - C) < 1e-12);
}

TEST_CASE("solve_care scalar oracle cases") {
    // a=0,b=1,q=1,r=1: -p^2 + 1 = 0 -> p = 1
    Mat A{{0.0}}, B{{1.0}}, Q{{1.0}}, R{{1.0}};
    CareResult res = solve_care(A, B, Q, R);
    CHECK(res.P(0, 0) == Catch::Approx(1.0).margin(1e-10));

    // a=-1: -2p - p^2 + 1 = 0 -> p = -1 + sqrt(2)
    Mat A2{{-1.0}};
    CareResult res2 = solve_care(A2, B, Q, R);
    CHECK(res2.P(0, 0) == Catch::Approx(std::sqrt(2.0) - 1.0).margin(1e-10));
    CHECK(res2.residual < 1e-8);
}

TEST_CASE("solve_care on random stabilizable triples") {
    Rng rng(13);
    for (int k = 0; k < 25; ++k) {
        const std::size_t n = 2 + k % 3;
        Mat A(n, n), B(n, 1);
        for (double& x : A.a) x = rng.uniform(-1, 1);
        for (double& x : B.a) x = rng.uniform(-1, 1) + 0.2; // avoid the zero column
        Mat Q = Mat::identity(n), R{{1.0}};
        CareResult res;
        try {
            res = solve_care(A, B, Q, R);
        } catch (const std::runtime_error&) {
            continue; // uncontrollable draw
        }
        CHECK(res.residual < 1e-8);
        CHECK(max_abs(res.P - transpose(res.P)) < 1e-10);
        CHECK(sym_eig_min(res.P) > 0.0);
        // closed-loop Lyapunov identity: A_cl^T P + P A_cl = -(Q + K^T R K) < 0
        Mat Acl = A - B * res.K;
        CHECK(sym_eig_max(transpose(Acl) * res.P + res.P * Acl) < -1e-6);
    }
}

TEST_CASE("is_hurwitz classifies simple cases") {
    CHECK(is_hurwitz(Mat{{-1, 0}, {0, -2}}));
    CHECK_FALSE(is_hurwitz(Mat{{1, 0}, {0, -2}}));
}
