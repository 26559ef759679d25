#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "contrakt/mat.hpp"
#include "contrakt/nn.hpp"

namespace contrakt {

/// Paired element-wise lower/upper bound matrices, lo <= hi entry-wise.
struct MatrixBounds {
    Mat lo;
    Mat hi;

    MatrixBounds() = default;
    MatrixBounds(Mat l, Mat h) : lo(std::move(l)), hi(std::move(h)) {
        if (!lo.same_shape(hi)) throw std::invalid_argument("MatrixBounds: shape mismatch");
    }

    /// Degenerate bounds lo = hi = A.
    static MatrixBounds point(const Mat& A) { return {A, A}; }

    [[nodiscard]] std::size_t rows() const { return lo.rows; }
    [[nodiscard]] std::size_t cols() const { return lo.cols; }

    void validate() const {
        if (!lo.same_shape(hi)) throw std::invalid_argument("MatrixBounds: shape mismatch");
        for (std::size_t i = 0; i < lo.a.size(); ++i)
            if (!(lo.a[i] <= hi.a[i]) || !std::isfinite(lo.a[i]) || !std::isfinite(hi.a[i]))
                throw std::invalid_argument("MatrixBounds: lo > hi or non-finite entry");
    }

    [[nodiscard]] bool contains(const Mat& A, double slack = 0.0) const {
        if (!A.same_shape(lo)) return false;
        for (std::size_t i = 0; i < A.a.size(); ++i)
            if (A.a[i] < lo.a[i] - slack || A.a[i] > hi.a[i] + slack) return false;
        return true;
    }
};

inline MatrixBounds operator+(const MatrixBounds& a, const MatrixBounds& b) {
    return {a.lo + b.lo, a.hi + b.hi};
}

/// Bounds of the product W Q from an exact matrix W and element-wise bounds
/// on Q: positive entries of W pair with (lo, hi), negative with (hi, lo).
inline MatrixBounds func1(const MatrixBounds& q, const Mat& W) {
    if (W.cols != q.rows()) throw std::invalid_argument("func1: shape mismatch");
    MatrixBounds out(Mat(W.rows, q.cols()), Mat(W.rows, q.cols()));
    for (std::size_t i = 0; i < W.rows; ++i)
        for (std::size_t k = 0; k < W.cols; ++k) {
            const double w = W(i, k);
            if (w == 0.0) continue;
            if (w >= 0.0) {
                for (std::size_t j = 0; j < q.cols(); ++j) {
                    out.lo(i, j) += w * q.lo(k, j);
                    out.hi(i, j) += w * q.hi(k, j);
                }
            } else {
                for (std::size_t j = 0; j < q.cols(); ++j) {
                    out.lo(i, j) += w * q.hi(k, j);
                    out.hi(i, j) += w * q.lo(k, j);
                }
            }
        }
    return out;
}

/// Bounds of J P where J is diagonal with entries in [a, b], 0 < a <= b,
/// and P lies within p. Per entry: both bounds >= 0 -> (a lo, b hi);
/// straddling zero -> (b lo, b hi); both <= 0 -> (b lo, a hi).
inline MatrixBounds func2(const MatrixBounds& p, double a, double b) {
    if (!(a > 0.0) || !(a <= b)) throw std::invalid_argument("func2: need 0 < a <= b");
    MatrixBounds out = p;
    for (std::size_t i = 0; i < p.lo.a.size(); ++i) {
        const double lo = p.lo.a[i], hi = p.hi.a[i];
        out.lo.a[i] = (lo >= 0.0) ? a * lo : b * lo;
        out.hi.a[i] = (hi >= 0.0) ? b * hi : a * hi;
    }
    return out;
}

namespace detail {

/// Per-term bounds of w*p over w in [lw, uw], p in [lp, up]. The sign-definite
/// cases use the two sharp corners; the mixed case takes all four corner
/// products, which is the exact interval product.
inline void interval_term(double lw, double uw, double lp, double up, double& tlo, double& thi) {
    if (lw >= 0.0 && lp >= 0.0) {
        tlo = lw * lp;
        thi = uw * up;
    } else if (uw <= 0.0 && up <= 0.0) {
        tlo = uw * up;
        thi = lw * lp;
    } else {
        const double c1 = lw * lp, c2 = lw * up, c3 = uw * lp, c4 = uw * up;
        tlo = std::min(std::min(c1, c2), std::min(c3, c4));
        thi = std::max(std::max(c1, c2), std::max(c3, c4));
    }
}

} // namespace detail

/// Bounds of the product W P from element-wise bounds on both factors,
/// summing per-term corner bounds over the contraction index.
inline MatrixBounds func3(const MatrixBounds& w, const MatrixBounds& p) {
    if (w.cols() != p.rows()) throw std::invalid_argument("func3: shape mismatch");
    MatrixBounds out(Mat(w.rows(), p.cols()), Mat(w.rows(), p.cols()));
    for (std::size_t i = 0; i < w.rows(); ++i)
        for (std::size_t k = 0; k < w.cols(); ++k)
            for (std::size_t j = 0; j < p.cols(); ++j) {
                double tlo, thi;
                detail::interval_term(w.lo(i, k), w.hi(i, k), p.lo(k, j), p.hi(k, j), tlo, thi);
                out.lo(i, j) += tlo;
                out.hi(i, j) += thi;
            }
    return out;
}

/// Element-wise bounds of the controller Jacobian du/dx, valid for every x:
/// starting from point bounds I, alternate func1 with each W_i and func2 with
/// the slope interval, then apply a final func1 with W_o so the result covers
/// the full product W_o J_N W_N ... J_1 W_1.
inline MatrixBounds jacobian_bounds(const MlpParams& p) {
    MatrixBounds b = MatrixBounds::point(Mat::identity(p.input_dim()));
    for (std::size_t l = 0; l < p.depth(); ++l) {
        b = func1(b, p.weights[l]);
        b = func2(b, p.slope_lo(), p.slope_hi());
    }
    return func1(b, p.output_weight);
}

/// Bounds of Mdot + M g du/dx, the matrix tested by the Gershgorin condition:
/// jacobian_bounds -> func1 with g -> func3 with the metric bounds -> add the
/// Mdot bounds (g is applied first, the metric interval last).
inline MatrixBounds theorem2_lhs_bounds(const MatrixBounds& m_bounds, const Mat& g,
                                        const MlpParams& p, const MatrixBounds& mdot_bounds) {
    const std::size_t n = g.rows;
    if (m_bounds.rows() != n || m_bounds.cols() != n)
        throw std::invalid_argument("theorem2_lhs_bounds: metric bounds must be n x n");
    if (mdot_bounds.rows() != n || mdot_bounds.cols() != n)
        throw std::invalid_argument("theorem2_lhs_bounds: mdot bounds must be n x n");
    if (p.input_dim() != n || p.output_dim() != g.cols)
        throw std::invalid_argument("theorem2_lhs_bounds: controller dimensions mismatch");
    MatrixBounds jac = jacobian_bounds(p);      // m x n
    MatrixBounds gj = func1(jac, g);            // n x n, bounds g du/dx
    MatrixBounds theta = func3(m_bounds, gj);   // n x n, bounds M g du/dx
    return theta + mdot_bounds;
}

} // namespace contrakt
