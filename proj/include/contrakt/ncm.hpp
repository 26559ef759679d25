#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "contrakt/ibp.hpp"
#include "contrakt/linalg.hpp"
#include "contrakt/mat.hpp"
#include "contrakt/rng.hpp"
#include "contrakt/systems.hpp"

namespace contrakt {

/// log(cosh(z)) = |z| + log((1 + e^{-2|z|})/2), stable for large |z|.
inline double log_cosh(double z) {
    const double az = std::abs(z);
    return az + std::log1p(std::exp(-2.0 * az)) - 0.6931471805599453;
}

/// Scalar map s -> sum_h a_h tanh(w_h s + c_h); bounded output, C^inf.
struct ScalarNet {
    Vec w, c, a;

    [[nodiscard]] double eval(double s) const {
        double y = 0.0;
        for (std::size_t h = 0; h < w.size(); ++h) y += a[h] * std::tanh(w[h] * s + c[h]);
        return y;
    }
    [[nodiscard]] double deriv(double s) const {
        double y = 0.0;
        for (std::size_t h = 0; h < w.size(); ++h) {
            const double t = std::tanh(w[h] * s + c[h]);
            y += a[h] * w[h] * (1.0 - t * t);
        }
        return y;
    }
};

enum class NcmMode { identity, log_cosh, general };

inline std::string to_string(NcmMode m) {
    switch (m) {
        case NcmMode::identity: return "identity";
        case NcmMode::log_cosh: return "log_cosh";
        case NcmMode::general: return "general";
    }
    throw std::logic_error("bad NcmMode");
}

inline NcmMode ncm_mode_from_string(const std::string& s) {
    if (s == "identity") return NcmMode::identity;
    if (s == "log_cosh") return NcmMode::log_cosh;
    if (s == "general") return NcmMode::general;
    throw std::invalid_argument("unknown NCM mode: " + s);
}

/// Free parametrization of the contraction metric
///   M(x) = Gamma(x)^T Gamma(x) + eps*I,
/// where every entry of Gamma depends on x only through the projections
/// x^T v_l onto an orthonormal basis {v_l} of Ker(g^T .), so that
/// (d/dx M_ij) g = 0 identically. Identity mode is the constant metric I
/// with no trainable parameters.
struct NcmParams {
    NcmMode mode = NcmMode::identity;
    double epsilon = 0.1;
    std::size_t n = 0;
    std::vector<Vec> kernel_basis; // v_1 .. v_r

    // log_cosh mode: Gamma_ij = gamma_ij * logcosh(sum_l alpha[l]_ij (x.v_l) + bias_ij)
    Mat gamma, bias;
    std::vector<Mat> alpha; // one n x n coefficient matrix per basis vector

    // general mode: Gamma_ij = K_ij( sum_l beta_{l,ij}(x.v_l) )
    std::vector<ScalarNet> K;    // n*n nets, index i*n+j
    std::vector<ScalarNet> beta; // n*n*r nets, index (i*n+j)*r + l

    [[nodiscard]] std::size_t r() const { return kernel_basis.size(); }

    void validate(const Mat& g) const {
        if (!(epsilon > 0.0)) throw std::invalid_argument("NcmParams: epsilon must be > 0");
        for (const Vec& v : kernel_basis) {
            if (v.size() != n) throw std::invalid_argument("NcmParams: basis dimension mismatch");
            for (std::size_t j = 0; j < g.cols; ++j) {
                double s = 0.0;
                for (std::size_t i = 0; i < n; ++i) s += v[i] * g(i, j);
                if (std::abs(s) > 1e-10)
                    throw std::invalid_argument("NcmParams: basis vector does not annihilate g");
            }
        }
    }
};

inline NcmParams ncm_identity(std::size_t n) {
    NcmParams p;
    p.mode = NcmMode::identity;
    p.n = n;
    p.epsilon = 1.0; // min eigenvalue of I
    return p;
}

inline NcmParams ncm_log_cosh(const Mat& g, double epsilon, std::uint64_t seed) {
    NcmParams p;
    p.mode = NcmMode::log_cosh;
    p.n = g.rows;
    p.epsilon = epsilon;
    p.kernel_basis = null_space_basis(g);
    Rng rng(seed);
    p.gamma = Mat(p.n, p.n);
    p.bias = Mat(p.n, p.n);
    for (double& x : p.gamma.a) x = rng.uniform(-0.5, 0.5);
    for (double& x : p.bias.a) x = rng.uniform(-0.5, 0.5);
    for (std::size_t l = 0; l < p.r(); ++l) {
        Mat A(p.n, p.n);
        for (double& x : A.a) x = rng.uniform(-1.0, 1.0);
        p.alpha.push_back(std::move(A));
    }
    p.validate(g);
    return p;
}

inline NcmParams ncm_general(const Mat& g, double epsilon, std::size_t hidden,
                             std::uint64_t seed) {
    NcmParams p;
    p.mode = NcmMode::general;
    p.n = g.rows;
    p.epsilon = epsilon;
    p.kernel_basis = null_space_basis(g);
    Rng rng(seed);
    auto make_net = [&]() {
        ScalarNet net;
        net.w.resize(hidden);
        net.c.resize(hidden);
        net.a.resize(hidden);
        for (std::size_t h = 0; h < hidden; ++h) {
            net.w[h] = rng.uniform(-1.0, 1.0);
            net.c[h] = rng.uniform(-1.0, 1.0);
            net.a[h] = rng.uniform(-0.5, 0.5);
        }
        return net;
    };
    for (std::size_t ij = 0; ij < p.n * p.n; ++ij) {
        p.K.push_back(make_net());
        for (std::size_t l = 0; l < p.r(); ++l) p.beta.push_back(make_net());
    }
    p.validate(g);
    return p;
}

namespace detail {

/// Gamma(x) plus, per entry, the scalar coefficients of d Gamma_ij / dx on the
/// kernel basis: d Gamma_ij / dx = sum_l coeff[l](i,j) v_l.
struct GammaEval {
    Mat value;
    std::vector<Mat> coeff; // r matrices, n x n
};

inline GammaEval eval_gamma(const NcmParams& p, const Vec& x) {
    GammaEval out;
    const std::size_t n = p.n, r = p.r();
    out.value = Mat(n, n);
    out.coeff.assign(r, Mat(n, n));
    if (p.mode == NcmMode::identity) return out;

    Vec proj(r);
    for (std::size_t l = 0; l < r; ++l) proj[l] = dot(x, p.kernel_basis[l]);

    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (p.mode == NcmMode::log_cosh) {
                double z = p.bias(i, j);
                for (std::size_t l = 0; l < r; ++l) z += p.alpha[l](i, j) * proj[l];
                out.value(i, j) = p.gamma(i, j) * log_cosh(z);
                const double dz = p.gamma(i, j) * std::tanh(z);
                for (std::size_t l = 0; l < r; ++l) out.coeff[l](i, j) = dz * p.alpha[l](i, j);
            } else {
                double z = 0.0;
                for (std::size_t l = 0; l < r; ++l) z += p.beta[(i * n + j) * r + l].eval(proj[l]);
                out.value(i, j) = p.K[i * n + j].eval(z);
                const double dK = p.K[i * n + j].deriv(z);
                for (std::size_t l = 0; l < r; ++l)
                    out.coeff[l](i, j) = dK * p.beta[(i * n + j) * r + l].deriv(proj[l]);
            }
        }
    return out;
}

} // namespace detail

/// M(x) = Gamma^T Gamma + eps*I (identity mode: exactly I).
inline Mat ncm_eval(const NcmParams& p, const Vec& x) {
    if (p.mode == NcmMode::identity) return Mat::identity(p.n);
    const auto ge = detail::eval_gamma(p, x);
    Mat M = transpose(ge.value) * ge.value;
    for (std::size_t i = 0; i < p.n; ++i) M(i, i) += p.epsilon;
    return M;
}

/// Analytic entry gradients: row (i*n + j) holds d M_ij / dx, a vector that
/// lies in span{v_1..v_r} by construction.
inline Mat ncm_grad(const NcmParams& p, const Vec& x) {
    const std::size_t n = p.n;
    Mat rowsm(n * n, n);
    if (p.mode == NcmMode::identity) return rowsm;
    const auto ge = detail::eval_gamma(p, x);
    // M_ij = sum_k Gamma_ki Gamma_kj
    // dM_ij = sum_k (dGamma_ki) Gamma_kj + Gamma_ki (dGamma_kj)
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t l = 0; l < p.r(); ++l) {
                double s = 0.0;
                for (std::size_t k = 0; k < n; ++k)
                    s += ge.coeff[l](k, i) * ge.value(k, j) + ge.value(k, i) * ge.coeff[l](k, j);
                for (std::size_t d = 0; d < n; ++d)
                    rowsm(i * n + j, d) += s * p.kernel_basis[l][d];
            }
    return rowsm;
}

/// Mdot(x) with entries (dM_ij/dx) . (f(x) + g u). The kernel structure makes
/// the g u term vanish, so the result is independent of u.
inline Mat mdot_eval(const NcmParams& p, const SystemModel& sys, const Vec& x, const Vec& u) {
    const std::size_t n = p.n;
    Mat out(n, n);
    if (p.mode == NcmMode::identity) return out;
    const Mat grads = ncm_grad(p, x);
    const Vec xdot = sys.f(x) + sys.g * u;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t d = 0; d < n; ++d) s += grads(i * n + j, d) * xdot[d];
            out(i, j) = s;
        }
    return out;
}

// ---- grid machinery for bounds over a box ----

/// Uniform grid over a box with spacing at most tau per axis.
struct GridSpec {
    std::vector<std::size_t> counts;
    std::vector<double> spacing;
    Box box;
    double covering_radius = 0.0; // max distance of any box point to the grid

    GridSpec(const Box& b, double tau) : box(b) {
        box.validate();
        if (!(tau > 0.0)) throw std::invalid_argument("GridSpec: tau must be > 0");
        double rad2 = 0.0;
        for (std::size_t d = 0; d < box.dim(); ++d) {
            const double extent = box.hi[d] - box.lo[d];
            const auto cnt = static_cast<std::size_t>(std::ceil(extent / tau)) + 1;
            counts.push_back(std::max<std::size_t>(cnt, 2));
            spacing.push_back(extent / static_cast<double>(counts.back() - 1));
            rad2 += 0.25 * spacing.back() * spacing.back();
        }
        covering_radius = std::sqrt(rad2);
    }

    [[nodiscard]] std::size_t total() const {
        std::size_t t = 1;
        for (std::size_t c : counts) t *= c;
        return t;
    }

    [[nodiscard]] Vec point(std::size_t flat) const {
        Vec x(box.dim());
        for (std::size_t d = 0; d < box.dim(); ++d) {
            const std::size_t idx = flat % counts[d];
            flat /= counts[d];
            x[d] = box.lo[d] + spacing[d] * static_cast<double>(idx);
        }
        return x;
    }
};

/// Element-wise bounds of M over the box: dense grid min/max widened per entry
/// by an estimated Lipschitz constant (1.5 x the largest sampled gradient
/// norm) times the covering radius. Identity mode returns the point bounds.
inline MatrixBounds ncm_bounds(const NcmParams& p, const Box& domain, double tau) {
    if (p.mode == NcmMode::identity) return MatrixBounds::point(Mat::identity(p.n));
    const GridSpec grid(domain, tau);
    const std::size_t n = p.n;
    Mat lo(n, n, std::numeric_limits<double>::infinity());
    Mat hi(n, n, -std::numeric_limits<double>::infinity());
    Mat grad_norm(n, n); // max over grid of |dM_ij/dx|
    for (std::size_t t = 0; t < grid.total(); ++t) {
        const Vec x = grid.point(t);
        const Mat M = ncm_eval(p, x);
        const Mat G = ncm_grad(p, x);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                lo(i, j) = std::min(lo(i, j), M(i, j));
                hi(i, j) = std::max(hi(i, j), M(i, j));
                double gn = 0.0;
                for (std::size_t d = 0; d < n; ++d) gn += G(i * n + j, d) * G(i * n + j, d);
                grad_norm(i, j) = std::max(grad_norm(i, j), std::sqrt(gn));
            }
    }
    for (std::size_t k = 0; k < lo.a.size(); ++k) {
        const double margin = 1.5 * grad_norm.a[k] * grid.covering_radius;
        lo.a[k] -= margin;
        hi.a[k] += margin;
    }
    return {lo, hi};
}

/// Element-wise bounds of Mdot over the box, same gridding; the per-entry
/// Lipschitz constants come from finite-difference quotients between
/// axis-adjacent grid points (times the 1.5 safety factor).
inline MatrixBounds mdot_bounds(const NcmParams& p, const SystemModel& sys, const Box& domain,
                                double tau) {
    if (p.mode == NcmMode::identity) return MatrixBounds::point(Mat(p.n, p.n));
    const GridSpec grid(domain, tau);
    const std::size_t n = p.n;
    const Vec u0(sys.m, 0.0);
    Mat lo(n, n, std::numeric_limits<double>::infinity());
    Mat hi(n, n, -std::numeric_limits<double>::infinity());
    Mat quot(n, n); // max FD quotient per entry
    std::vector<Mat> vals(grid.total());
    for (std::size_t t = 0; t < grid.total(); ++t) {
        const Vec x = grid.point(t);
        vals[t] = mdot_eval(p, sys, x, u0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                lo(i, j) = std::min(lo(i, j), vals[t](i, j));
                hi(i, j) = std::max(hi(i, j), vals[t](i, j));
            }
    }
    // neighbor differences along each axis
    for (std::size_t t = 0; t < grid.total(); ++t) {
        std::size_t rem = t, stride = 1;
        for (std::size_t d = 0; d < grid.counts.size(); ++d) {
            const std::size_t idx = rem % grid.counts[d];
            rem /= grid.counts[d];
            if (idx + 1 < grid.counts[d]) {
                const std::size_t t2 = t + stride;
                for (std::size_t k = 0; k < quot.a.size(); ++k)
                    quot.a[k] = std::max(quot.a[k],
                                         std::abs(vals[t2].a[k] - vals[t].a[k]) / grid.spacing[d]);
            }
            stride *= grid.counts[d];
        }
    }
    for (std::size_t k = 0; k < lo.a.size(); ++k) {
        const double margin = 1.5 * quot.a[k] * grid.covering_radius;
        lo.a[k] -= margin;
        hi.a[k] += margin;
    }
    return {lo, hi};
}

} // namespace contrakt
