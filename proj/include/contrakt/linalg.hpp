#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "contrakt/mat.hpp"

namespace contrakt {

/// Full spectrum of a symmetric matrix, ascending.
struct SymEigResult {
    std::vector<double> eigenvalues; // sorted ascending
    double max = 0.0;                // == eigenvalues.back()
};

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
/// The input is symmetrized as (A + A^T)/2 first; sweeps run until the
/// off-diagonal Frobenius norm drops below 1e-12 relative to the matrix scale.
inline SymEigResult sym_eig(const Mat& A_in) {
    if (A_in.rows != A_in.cols) throw std::invalid_argument("sym_eig: matrix not square");
    const std::size_t n = A_in.rows;
    Mat A = 0.5 * (A_in + transpose(A_in));

    const double scale = std::max(1.0, frobenius_norm(A));
    const double tol = 1e-12 * scale;

    auto off_norm = [&]() {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) s += 2.0 * A(i, j) * A(i, j);
        return std::sqrt(s);
    };

    for (int sweep = 0; sweep < 100 && off_norm() > tol; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = A(p, q);
                if (std::abs(apq) <= 1e-300) continue;
                const double theta = (A(q, q) - A(p, p)) / (2.0 * apq);
                // t = sgn(theta)/(|theta| + sqrt(theta^2+1)), the smaller root
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = A(k, p), akq = A(k, q);
                    A(k, p) = c * akp - s * akq;
                    A(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = A(p, k), aqk = A(q, k);
                    A(p, k) = c * apk - s * aqk;
                    A(q, k) = s * apk + c * aqk;
                }
            }
        }
    }

    SymEigResult r;
    r.eigenvalues.resize(n);
    for (std::size_t i = 0; i < n; ++i) r.eigenvalues[i] = A(i, i);
    std::sort(r.eigenvalues.begin(), r.eigenvalues.end());
    r.max = r.eigenvalues.back();
    return r;
}

/// Largest eigenvalue of a symmetric matrix.
inline double sym_eig_max(const Mat& A) { return sym_eig(A).max; }

inline double sym_eig_min(const Mat& A) { return sym_eig(A).eigenvalues.front(); }

/// Spectral norm ||A||_2 via the symmetric eigenproblem on A^T A.
inline double spectral_norm(const Mat& A) {
    const double lam = sym_eig_max(transpose(A) * A);
    return std::sqrt(std::max(0.0, lam));
}

/// Orthonormal basis {v_1..v_r} of the left kernel of g, i.e. v^T g = 0,
/// r = n - rank(g). Built by Gram-Schmidt: first orthonormalize the columns
/// of g (rank detection via pivot norms), then sweep the standard basis.
inline std::vector<Vec> null_space_basis(const Mat& g) {
    const std::size_t n = g.rows;
    if (n == 0) throw std::invalid_argument("null_space_basis: empty matrix");
    const double rank_tol = 1e-9 * std::max(max_abs(g), 1e-30);

    std::vector<Vec> range; // orthonormal basis of the column space of g
    for (std::size_t j = 0; j < g.cols; ++j) {
        Vec v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = g(i, j);
        for (const Vec& q : range) v = v - dot(q, v) * q;
        for (const Vec& q : range) v = v - dot(q, v) * q; // re-orthogonalize
        const double nv = norm2(v);
        if (nv > rank_tol) range.push_back((1.0 / nv) * v);
    }

    std::vector<Vec> kernel;
    const std::size_t r = n - range.size();
    for (std::size_t j = 0; j < n && kernel.size() < r; ++j) {
        Vec v(n, 0.0);
        v[j] = 1.0;
        for (const Vec& q : range) v = v - dot(q, v) * q;
        for (const Vec& q : kernel) v = v - dot(q, v) * q;
        for (const Vec& q : range) v = v - dot(q, v) * q;
        for (const Vec& q : kernel) v = v - dot(q, v) * q;
        const double nv = norm2(v);
        if (nv > 1e-9) kernel.push_back((1.0 / nv) * v);
    }
    return kernel;
}

/// Solve the dense linear system M y = b by Gaussian elimination with
/// partial pivoting. Throws if M is singular to working precision.
inline Vec solve_linear(Mat M, Vec b) {
    const std::size_t n = M.rows;
    if (M.cols != n || b.size() != n) throw std::invalid_argument("solve_linear: bad shapes");
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(M(i, k)) > std::abs(M(piv, k))) piv = i;
        if (std::abs(M(piv, k)) < 1e-300) throw std::runtime_error("solve_linear: singular matrix");
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(M(k, j), M(piv, j));
            std::swap(b[k], b[piv]);
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = M(i, k) / M(k, k);
            if (f == 0.0) continue;
            for (std::size_t j = k; j < n; ++j) M(i, j) -= f * M(k, j);
            b[i] -= f * b[k];
        }
    }
    Vec y(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= M(i, j) * y[j];
        y[i] = s / M(i, i);
    }
    return y;
}

/// Solve the continuous Lyapunov equation A^T X + X A = C for X by Kronecker
/// vectorization: (I (x) A^T + A^T (x) I) vec(X) = vec(C) with column-major vec.
inline Mat solve_lyapunov(const Mat& A, const Mat& C) {
    const std::size_t n = A.rows;
    if (A.cols != n || C.rows != n || C.cols != n)
        throw std::invalid_argument("solve_lyapunov: bad shapes");
    Mat K(n * n, n * n);
    // X -> A^T X + X A, entry (i,j) of the result depends on column j and row i:
    // vec index v(i,j) = i + j*n.
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t row = i + j * n;
            for (std::size_t k = 0; k < n; ++k) {
                K(row, k + j * n) += A(k, i); // (A^T X)_{ij} = sum_k A_{ki} X_{kj}
                K(row, i + k * n) += A(k, j); // (X A)_{ij}   = sum_k X_{ik} A_{kj}
            }
        }
    Vec c(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) c[i + j * n] = C(i, j);
    Vec x = solve_linear(K, c);
    Mat X(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) X(i, j) = x[i + j * n];
    // symmetrize: C symmetric implies X symmetric in exact arithmetic
    return 0.5 * (X + transpose(X));
}

/// True if A is Hurwitz, decided via the Lyapunov equation
/// A^T X + X A = -I having a positive definite solution.
inline bool is_hurwitz(const Mat& A) {
    try {
        Mat X = solve_lyapunov(A, -1.0 * Mat::identity(A.rows));
        return sym_eig_min(X) > 0.0;
    } catch (const std::runtime_error&) {
        return false; // singular Lyapunov operator: eigenvalues on the axis
    }
}

struct CareResult {
    Mat P;           // stabilizing solution, symmetric positive definite
    Mat K;           // gain R^{-1} B^T P
    double residual; // max-abs Riccati residual
    int iterations;
};

/// Solve the continuous algebraic Riccati equation
///   A^T P + P A - P B R^{-1} B^T P + Q = 0
/// by Kleinman-Newton iteration. The initial stabilizing gain comes from
/// K0 = 0 when A is already Hurwitz, otherwise from Bass's eigenvalue-shift
/// construction (A + beta*I) W + W (A + beta*I)^T = 2 B B^T, K0 = B^T W^{-1}.
inline CareResult solve_care(const Mat& A, const Mat& B, const Mat& Q, const Mat& R) {
    const std::size_t n = A.rows, m = B.cols;
    if (A.cols != n || B.rows != n || Q.rows != n || Q.cols != n || R.rows != m || R.cols != m)
        throw std::invalid_argument("solve_care: bad shapes");

    auto r_inv_bt = [&](const Mat& X) { // R^{-1} B^T X, column by column
        Mat BtX = transpose(B) * X;
        Mat out(m, BtX.cols);
        for (std::size_t j = 0; j < BtX.cols; ++j) {
            Vec col(m);
            for (std::size_t i = 0; i < m; ++i) col[i] = BtX(i, j);
            Vec sol = solve_linear(R, col);
            for (std::size_t i = 0; i < m; ++i) out(i, j) = sol[i];
        }
        return out;
    };

    Mat K(m, n); // initial gain
    if (!is_hurwitz(A)) {
        const double beta = frobenius_norm(A) + 1.0;
        // (A + beta I) antistable; its "Gramian" W solves M W + W M^T = 2 B B^T.
        Mat M = A + beta * Mat::identity(n);
        Mat W = solve_lyapunov(transpose(M), 2.0 * (B * transpose(B)));
        // K0 = B^T W^{-1}: solve W^T y = B column-wise (W symmetric).
        Mat K0(m, n);
        for (std::size_t i = 0; i < m; ++i) {
            Vec bi(n);
            for (std::size_t k = 0; k < n; ++k) bi[k] = B(k, i);
            Vec yi = solve_linear(W, bi);
            for (std::size_t k = 0; k < n; ++k) K0(i, k) = yi[k];
        }
        K = K0;
        if (!is_hurwitz(A - B * K))
            throw std::runtime_error("solve_care: failed to find a stabilizing initial gain");
    }

    Mat P(n, n);
    double prev_change = std::numeric_limits<double>::infinity();
    int it = 0;
    for (; it < 200; ++it) {
        Mat Acl = A - B * K;
        Mat C = -1.0 * (Q + transpose(K) * (R * K));
        Mat Pn = solve_lyapunov(Acl, C);
        const double change = max_abs(Pn - P);
        P = Pn;
        K = r_inv_bt(P);
        if (change < 1e-13 * std::max(1.0, max_abs(P))) break;
        if (it > 20 && change > 1e3 * prev_change)
            throw std::runtime_error("solve_care: iteration diverging (system not stabilizable?)");
        prev_change = std::max(change, 1e-300);
    }
    if (it == 200) throw std::runtime_error("solve_care: no convergence in 200 iterations");

    Mat res = transpose(A) * P + P * A - P * (B * r_inv_bt(P)) + Q;
    CareResult out{P, K, max_abs(res), it + 1};
    if (out.residual > 1e-8 * std::max(1.0, max_abs(P)))
        throw std::runtime_error("solve_care: residual too large after convergence");
    if (sym_eig_min(P) <= 0.0) throw std::runtime_error("solve_care: P not positive definite");
    return out;
}

} // namespace contrakt
