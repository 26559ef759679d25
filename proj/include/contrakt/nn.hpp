#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "contrakt/mat.hpp"
#include "contrakt/rng.hpp"

namespace contrakt {

// ---- slope-restricted activation ----

/// Smooth leaky-ReLU sigma(x) = alpha*x + (1-alpha)*log(1+e^x).
/// Branches at |x| = 30 to avoid overflow in e^x.
inline double act(double x, double alpha) {
    double sp;
    if (x > 30.0)
        sp = x + std::exp(-x);
    else if (x < -30.0)
        sp = std::exp(x);
    else
        sp = std::log1p(std::exp(x));
    return alpha * x + (1.0 - alpha) * sp;
}

/// sigma'(x) = alpha + (1-alpha) * logistic(x), in (alpha, 1).
inline double act_slope(double x, double alpha) {
    double sig;
    if (x >= 0.0) {
        sig = 1.0 / (1.0 + std::exp(-x));
    } else {
        const double e = std::exp(x);
        sig = e / (1.0 + e);
    }
    return alpha + (1.0 - alpha) * sig;
}

/// Parameters of the slope-restricted feedback controller
///   z_1 = sigma(W_1 x + b_1),  z_i = sigma(W_i z_{i-1} + b_i),  u = W_o z_N.
/// The activation slope lies in [slope_lo, slope_hi] = [alpha, 1].
struct MlpParams {
    std::vector<Mat> weights; // W_1 .. W_N
    std::vector<Vec> biases;  // b_1 .. b_N
    Mat output_weight;        // W_o
    double alpha = 0.3;

    [[nodiscard]] double slope_lo() const { return alpha; }
    [[nodiscard]] double slope_hi() const { return 1.0; }
    [[nodiscard]] std::size_t depth() const { return weights.size(); }
    [[nodiscard]] std::size_t input_dim() const { return weights.front().cols; }
    [[nodiscard]] std::size_t output_dim() const { return output_weight.rows; }

    void validate() const {
        if (weights.empty() || weights.size() != biases.size())
            throw std::invalid_argument("MlpParams: need N >= 1 layers with matching biases");
        if (!(alpha > 0.0 && alpha < 1.0))
            throw std::invalid_argument("MlpParams: alpha must lie in (0, 1)");
        std::size_t prev = weights.front().cols;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            if (weights[i].cols != prev || weights[i].rows != biases[i].size())
                throw std::invalid_argument("MlpParams: layer shapes do not chain");
            if (!all_finite(weights[i]) || !all_finite(biases[i]))
                throw std::invalid_argument("MlpParams: non-finite parameter");
            prev = weights[i].rows;
        }
        if (output_weight.cols != prev || !all_finite(output_weight))
            throw std::invalid_argument("MlpParams: output weight mismatch");
    }
};

/// Cotangents w.r.t. every parameter, shape-matched to an MlpParams.
struct MlpGrads {
    std::vector<Mat> weights;
    std::vector<Vec> biases;
    Mat output_weight;

    static MlpGrads zeros_like(const MlpParams& p) {
        MlpGrads g;
        for (const Mat& W : p.weights) g.weights.emplace_back(W.rows, W.cols);
        for (const Vec& b : p.biases) g.biases.emplace_back(b.size(), 0.0);
        g.output_weight = Mat(p.output_weight.rows, p.output_weight.cols);
        return g;
    }

    MlpGrads& axpy(double s, const MlpGrads& o) {
        for (std::size_t l = 0; l < weights.size(); ++l) {
            for (std::size_t i = 0; i < weights[l].a.size(); ++i)
                weights[l].a[i] += s * o.weights[l].a[i];
            for (std::size_t i = 0; i < biases[l].size(); ++i) biases[l][i] += s * o.biases[l][i];
        }
        for (std::size_t i = 0; i < output_weight.a.size(); ++i)
            output_weight.a[i] += s * o.output_weight.a[i];
        return *this;
    }
};

/// Seeded uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)].
inline MlpParams mlp_init(std::size_t n_in, const std::vector<std::size_t>& hidden,
                          std::size_t n_out, double alpha, std::uint64_t seed) {
    if (hidden.empty()) throw std::invalid_argument("mlp_init: need at least one hidden layer");
    Rng rng(seed);
    MlpParams p;
    p.alpha = alpha;
    std::size_t prev = n_in;
    for (std::size_t w : hidden) {
        const double s = 1.0 / std::sqrt(static_cast<double>(prev));
        Mat W(w, prev);
        for (double& x : W.a) x = rng.uniform(-s, s);
        Vec b(w);
        for (double& x : b) x = rng.uniform(-s, s);
        p.weights.push_back(std::move(W));
        p.biases.push_back(std::move(b));
        prev = w;
    }
    const double s = 1.0 / std::sqrt(static_cast<double>(prev));
    p.output_weight = Mat(n_out, prev);
    for (double& x : p.output_weight.a) x = rng.uniform(-s, s);
    p.validate();
    return p;
}

/// Pre-activations and activations of every layer, for jacobian/backprop reuse.
struct MlpCache {
    std::vector<Vec> pre; // W_i z_{i-1} + b_i
    std::vector<Vec> z;   // sigma(pre)
    Vec u;
};

inline MlpCache mlp_forward_cached(const MlpParams& p, const Vec& x) {
    if (x.size() != p.input_dim()) throw std::invalid_argument("forward: input dimension mismatch");
    MlpCache c;
    Vec cur = x;
    for (std::size_t l = 0; l < p.depth(); ++l) {
        Vec pre = p.weights[l] * cur + p.biases[l];
        Vec z(pre.size());
        for (std::size_t i = 0; i < pre.size(); ++i) z[i] = act(pre[i], p.alpha);
        c.pre.push_back(pre);
        c.z.push_back(z);
        cur = z;
    }
    c.u = p.output_weight * cur;
    return c;
}

/// u_theta(x).
inline Vec mlp_forward(const MlpParams& p, const Vec& x) { return mlp_forward_cached(p, x).u; }

/// Exact input Jacobian du/dx = W_o J_N W_N ... J_1 W_1 with
/// J_i = diag(sigma'(pre_i)).
inline Mat mlp_input_jacobian(const MlpParams& p, const Vec& x) {
    const MlpCache c = mlp_forward_cached(p, x);
    Mat J = p.weights[0]; // running product J_i W_i ... J_1 W_1 after scaling
    for (std::size_t l = 0; l < p.depth(); ++l) {
        if (l > 0) J = p.weights[l] * J;
        for (std::size_t i = 0; i < J.rows; ++i) {
            const double s = act_slope(c.pre[l][i], p.alpha);
            for (std::size_t j = 0; j < J.cols; ++j) J(i, j) *= s;
        }
    }
    return p.output_weight * J;
}

/// Reverse-mode gradients of cot . u_theta(x) w.r.t. all parameters.
inline MlpGrads mlp_backprop(const MlpParams& p, const Vec& x, const Vec& cot) {
    if (cot.size() != p.output_dim()) throw std::invalid_argument("backprop: cotangent mismatch");
    const MlpCache c = mlp_forward_cached(p, x);
    MlpGrads g = MlpGrads::zeros_like(p);

    // d(cot.u)/dWo = cot z_N^T
    const Vec& zN = c.z.back();
    for (std::size_t i = 0; i < p.output_weight.rows; ++i)
        for (std::size_t j = 0; j < p.output_weight.cols; ++j)
            g.output_weight(i, j) = cot[i] * zN[j];

    Vec dz = transpose(p.output_weight) * cot;
    for (std::size_t l = p.depth(); l-- > 0;) {
        Vec dpre(dz.size());
        for (std::size_t i = 0; i < dz.size(); ++i)
            dpre[i] = dz[i] * act_slope(c.pre[l][i], p.alpha);
        const Vec& in = (l == 0) ? x : c.z[l - 1];
        for (std::size_t i = 0; i < p.weights[l].rows; ++i)
            for (std::size_t j = 0; j < p.weights[l].cols; ++j)
                g.weights[l](i, j) = dpre[i] * in[j];
        g.biases[l] = dpre;
        if (l > 0) dz = transpose(p.weights[l]) * dpre;
    }
    return g;
}

} // namespace contrakt
