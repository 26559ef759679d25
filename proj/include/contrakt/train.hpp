#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "contrakt/certify.hpp"
#include "contrakt/ibp.hpp"
#include "contrakt/mat.hpp"
#include "contrakt/ncm.hpp"
#include "contrakt/nn.hpp"
#include "contrakt/systems.hpp"

namespace contrakt {

/// Equilibrium regularizer l1 = ||f(x*) + g u_theta(x*)||.
inline double loss_l1(const SystemModel& sys, const MlpParams& controller, const Vec& x_star) {
    return norm2(sys.f(x_star) + sys.g * mlp_forward(controller, x_star));
}

/// Contractivity hinge: sum_i [ -margin_i ]_+ over the Gershgorin row margins.
inline double loss_l2(const Vec& row_margins) {
    double s = 0.0;
    for (double m : row_margins) s += std::max(0.0, -m);
    return s;
}

namespace detail {

/// Forward pass of the certificate bound pipeline with every stage cached,
/// so the reverse pass can rediscover each min/max branch.
struct BoundPipeline {
    std::vector<MatrixBounds> pre_f1;  // input of func1 for layer l
    std::vector<MatrixBounds> pre_f2;  // input of func2 for layer l
    MatrixBounds pre_out;              // input of the final func1 with Wo
    MatrixBounds jac;                  // jacobian bounds (after Wo)
    MatrixBounds gjac;                 // after func1 with g
    MatrixBounds lhs;                  // func3 with metric bounds + mdot bounds
    Vec margins;
    double l2 = 0.0;
};

inline BoundPipeline run_pipeline(const MlpParams& p, const Mat& g, const MatrixBounds& m_bounds,
                                  const MatrixBounds& mdot_bounds, double eta) {
    BoundPipeline pl;
    MatrixBounds b = MatrixBounds::point(Mat::identity(p.input_dim()));
    for (std::size_t l = 0; l < p.depth(); ++l) {
        pl.pre_f1.push_back(b);
        b = func1(b, p.weights[l]);
        pl.pre_f2.push_back(b);
        b = func2(b, p.slope_lo(), p.slope_hi());
    }
    pl.pre_out = b;
    pl.jac = func1(b, p.output_weight);
    pl.gjac = func1(pl.jac, g);
    pl.lhs = func3(m_bounds, pl.gjac) + mdot_bounds;
    GershgorinResult gr = gershgorin_check(pl.lhs, eta);
    pl.margins = gr.row_margins;
    pl.l2 = loss_l2(pl.margins);
    return pl;
}

/// Reverse of func1 (exact W, interval input). Accumulates dW and returns the
/// input cotangents. At W entries exactly zero the first (>= 0) branch wins.
inline MatrixBounds func1_reverse(const Mat& W, const MatrixBounds& in, const MatrixBounds& dout,
                                  Mat* dW) {
    MatrixBounds din(Mat(in.rows(), in.cols()), Mat(in.rows(), in.cols()));
    for (std::size_t i = 0; i < W.rows; ++i)
        for (std::size_t k = 0; k < W.cols; ++k) {
            const bool pos = W(i, k) >= 0.0;
            double grad_w = 0.0;
            for (std::size_t j = 0; j < in.cols(); ++j) {
                const double dlo = dout.lo(i, j), dhi = dout.hi(i, j);
                if (pos) {
                    din.lo(k, j) += W(i, k) * dlo;
                    din.hi(k, j) += W(i, k) * dhi;
                    grad_w += dlo * in.lo(k, j) + dhi * in.hi(k, j);
                } else {
                    din.hi(k, j) += W(i, k) * dlo;
                    din.lo(k, j) += W(i, k) * dhi;
                    grad_w += dlo * in.hi(k, j) + dhi * in.lo(k, j);
                }
            }
            if (dW) (*dW)(i, k) += grad_w;
        }
    return din;
}

inline MatrixBounds func2_reverse(const MatrixBounds& in, double a, double b,
                                  const MatrixBounds& dout) {
    MatrixBounds din = dout;
    for (std::size_t k = 0; k < in.lo.a.size(); ++k) {
        din.lo.a[k] = (in.lo.a[k] >= 0.0 ? a : b) * dout.lo.a[k];
        din.hi.a[k] = (in.hi.a[k] >= 0.0 ? b : a) * dout.hi.a[k];
    }
    return din;
}

/// Reverse of func3 w.r.t. the second (interval) factor; the metric factor is
/// treated as fixed within an optimization step.
inline MatrixBounds func3_reverse_p(const MatrixBounds& w, const MatrixBounds& p,
                                    const MatrixBounds& dout) {
    MatrixBounds dp(Mat(p.rows(), p.cols()), Mat(p.rows(), p.cols()));
    for (std::size_t i = 0; i < w.rows(); ++i)
        for (std::size_t k = 0; k < w.cols(); ++k)
            for (std::size_t j = 0; j < p.cols(); ++j) {
                const double lw = w.lo(i, k), uw = w.hi(i, k);
                const double lp = p.lo(k, j), up = p.hi(k, j);
                const double dlo = dout.lo(i, j), dhi = dout.hi(i, j);
                if (dlo == 0.0 && dhi == 0.0) continue;
                if (lw >= 0.0 && lp >= 0.0) {
                    dp.lo(k, j) += lw * dlo;
                    dp.hi(k, j) += uw * dhi;
                } else if (uw <= 0.0 && up <= 0.0) {
                    dp.hi(k, j) += uw * dlo;
                    dp.lo(k, j) += lw * dhi;
                } else {
                    // corner order matches the forward min/max scan
                    const double c[4] = {lw * lp, lw * up, uw * lp, uw * up};
                    int amin = 0, amax = 0;
                    for (int t = 1; t < 4; ++t) {
                        if (c[t] < c[amin]) amin = t;
                        if (c[t] > c[amax]) amax = t;
                    }
                    const double wmin = (amin < 2) ? lw : uw;
                    const double wmax = (amax < 2) ? lw : uw;
                    if (amin % 2 == 0) dp.lo(k, j) += wmin * dlo; else dp.hi(k, j) += wmin * dlo;
                    if (amax % 2 == 0) dp.lo(k, j) += wmax * dhi; else dp.hi(k, j) += wmax * dhi;
                }
            }
    return dp;
}

} // namespace detail

struct L2WithGrads {
    double l2 = 0.0;
    Vec margins;
    MlpGrads grads;
};

/// l2 and its subgradient w.r.t. the controller parameters, obtained by a
/// reverse sweep through the hinge, the Gershgorin margins and the
/// func1/func2/func3 pipeline, routing through the active branch everywhere
/// (ties go to the first argument).
inline L2WithGrads l2_with_grads(const MlpParams& p, const Mat& g, const MatrixBounds& m_bounds,
                                 const MatrixBounds& mdot_bounds, double eta) {
    const detail::BoundPipeline pl = detail::run_pipeline(p, g, m_bounds, mdot_bounds, eta);
    L2WithGrads out;
    out.l2 = pl.l2;
    out.margins = pl.margins;
    out.grads = MlpGrads::zeros_like(p);

    const std::size_t n = pl.lhs.rows();
    MatrixBounds dlhs(Mat(n, n), Mat(n, n));
    for (std::size_t i = 0; i < n; ++i) {
        if (!(-pl.margins[i] > 0.0)) continue; // hinge inactive (ties give zero)
        dlhs.hi(i, i) += 2.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const double sl = std::abs(pl.lhs.lo(i, j) + pl.lhs.lo(j, i));
            const double su = std::abs(pl.lhs.hi(i, j) + pl.lhs.hi(j, i));
            if (sl >= su) {
                const double s = (pl.lhs.lo(i, j) + pl.lhs.lo(j, i)) >= 0.0 ? 1.0 : -1.0;
                dlhs.lo(i, j) += s;
                dlhs.lo(j, i) += s;
            } else {
                const double s = (pl.lhs.hi(i, j) + pl.lhs.hi(j, i)) >= 0.0 ? 1.0 : -1.0;
                dlhs.hi(i, j) += s;
                dlhs.hi(j, i) += s;
            }
        }
    }

    MatrixBounds dg = detail::func3_reverse_p(m_bounds, pl.gjac, dlhs);
    MatrixBounds dj = detail::func1_reverse(g, pl.jac, dg, nullptr);
    MatrixBounds db = detail::func1_reverse(p.output_weight, pl.pre_out, dj, &out.grads.output_weight);
    for (std::size_t l = p.depth(); l-- > 0;) {
        db = detail::func2_reverse(pl.pre_f2[l], p.slope_lo(), p.slope_hi(), db);
        db = detail::func1_reverse(p.weights[l], pl.pre_f1[l], db, &out.grads.weights[l]);
    }
    return out;
}

struct TrainConfig {
    double rho = 0.5;
    double nu = 1.0;
    double lr = 1e-3;
    std::size_t epochs = 20000;
    std::uint64_t seed = 1;
    Box domain;
    double grid_tau = 0.05;
    Vec x_star;
    std::string optimizer = "adam"; // "adam" or "sgd"
    double target_l1 = 1e-4;
    std::size_t log_every = 100;
    bool train_ncm = false;

    void validate() const {
        if (!(rho > 0.0) || !(nu > 0.0) || !(lr > 0.0) || epochs < 1)
            throw std::invalid_argument("TrainConfig: need rho, nu, lr > 0 and epochs >= 1");
        domain.validate();
        if (x_star.size() != domain.dim())
            throw std::invalid_argument("TrainConfig: x_star dimension mismatch");
        if (optimizer != "adam" && optimizer != "sgd")
            throw std::invalid_argument("TrainConfig: unknown optimizer " + optimizer);
    }
};

struct TrainRecord {
    std::size_t epoch;
    double l1;
    double l2;
    double total;
};

struct TrainResult {
    MlpParams controller;
    NcmParams ncm;
    std::vector<TrainRecord> history;
    bool reached_targets = false;
    double final_l1 = 0.0;
    double final_l2 = 0.0;
    EtaResult eta;
};

namespace detail {

/// Flat views over the trainable scalars of an NcmParams (empty for identity).
inline std::vector<double*> ncm_trainable(NcmParams& p) {
    std::vector<double*> out;
    if (p.mode == NcmMode::log_cosh) {
        for (double& x : p.gamma.a) out.push_back(&x);
        for (double& x : p.bias.a) out.push_back(&x);
        for (Mat& A : p.alpha)
            for (double& x : A.a) out.push_back(&x);
    } else if (p.mode == NcmMode::general) {
        auto push_net = [&out](ScalarNet& s) {
            for (double& x : s.w) out.push_back(&x);
            for (double& x : s.c) out.push_back(&x);
            for (double& x : s.a) out.push_back(&x);
        };
        for (ScalarNet& s : p.K) push_net(s);
        for (ScalarNet& s : p.beta) push_net(s);
    }
    return out;
}

class Adam {
public:
    Adam(std::size_t size, double lr, bool plain_sgd)
        : m_(size, 0.0), v_(size, 0.0), lr_(lr), sgd_(plain_sgd) {}

    void step(std::vector<double*>& params, const std::vector<double>& grads) {
        ++t_;
        if (sgd_) {
            for (std::size_t i = 0; i < params.size(); ++i) *params[i] -= lr_ * grads[i];
            return;
        }
        const double bc1 = 1.0 - std::pow(0.9, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(0.999, static_cast<double>(t_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i] = 0.9 * m_[i] + 0.1 * grads[i];
            v_[i] = 0.999 * v_[i] + 0.001 * grads[i] * grads[i];
            *params[i] -= lr_ * (m_[i] / bc1) / (std::sqrt(v_[i] / bc2) + 1e-8);
        }
    }

private:
    std::vector<double> m_, v_;
    double lr_;
    bool sgd_;
    long t_ = 0;
};

inline std::vector<double*> mlp_trainable(MlpParams& p) {
    std::vector<double*> out;
    for (Mat& W : p.weights)
        for (double& x : W.a) out.push_back(&x);
    for (Vec& b : p.biases)
        for (double& x : b) out.push_back(&x);
    for (double& x : p.output_weight.a) out.push_back(&x);
    return out;
}

inline void flatten_grads(const MlpGrads& g, std::vector<double>& out) {
    out.clear();
    for (const Mat& W : g.weights) out.insert(out.end(), W.a.begin(), W.a.end());
    for (const Vec& b : g.biases) out.insert(out.end(), b.begin(), b.end());
    out.insert(out.end(), g.output_weight.a.begin(), g.output_weight.a.end());
}

} // namespace detail

/// Co-synthesis loop: minimize l1 + nu*l2 over the controller (and, when
/// train_ncm is set and the metric has parameters, over the metric, whose
/// subgradients come from central differences with eta frozen per step).
/// With the identity metric, eta and the metric bounds are constants of the
/// whole run and are computed once.
inline TrainResult train(const SystemModel& sys, MlpParams controller, NcmParams ncm,
                         const TrainConfig& cfg) {
    cfg.validate();
    controller.validate();

    TrainResult res;
    const bool joint_phi = cfg.train_ncm && ncm.mode != NcmMode::identity;

    EtaResult eta = compute_eta(sys, ncm, cfg.rho, cfg.domain, cfg.grid_tau);
    MatrixBounds m_bounds = ncm_bounds(ncm, cfg.domain, cfg.grid_tau);
    MatrixBounds md_bounds = mdot_bounds(ncm, sys, cfg.domain, cfg.grid_tau);

    std::vector<double*> theta = detail::mlp_trainable(controller);
    std::vector<double*> phi = detail::ncm_trainable(ncm);
    const std::size_t total = theta.size() + (joint_phi ? phi.size() : 0);
    detail::Adam opt(total, cfg.lr, cfg.optimizer == "sgd");
    std::vector<double*> all = theta;
    if (joint_phi) all.insert(all.end(), phi.begin(), phi.end());

    std::vector<double> grads;
    grads.reserve(total);

    double l1 = 0.0, l2 = 0.0;
    std::size_t last_epoch = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        last_epoch = epoch;
        if (joint_phi && epoch > 0) {
            eta = compute_eta(sys, ncm, cfg.rho, cfg.domain, cfg.grid_tau);
            m_bounds = ncm_bounds(ncm, cfg.domain, cfg.grid_tau);
            md_bounds = mdot_bounds(ncm, sys, cfg.domain, cfg.grid_tau);
        }

        // l1 and its gradient through the closed-loop residual direction
        const Vec r = sys.f(cfg.x_star) + sys.g * mlp_forward(controller, cfg.x_star);
        l1 = norm2(r);
        MlpGrads g1 = MlpGrads::zeros_like(controller);
        if (l1 > 0.0) {
            Vec cot = transpose(sys.g) * ((1.0 / l1) * r);
            g1 = mlp_backprop(controller, cfg.x_star, cot);
        }

        L2WithGrads g2 = l2_with_grads(controller, sys.g, m_bounds, md_bounds, eta.eta);
        l2 = g2.l2;

        const double totalloss = l1 + cfg.nu * l2;
        if (!std::isfinite(totalloss))
            throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch) +
                                     " (l1=" + std::to_string(l1) + ", l2=" + std::to_string(l2) + ")");

        if (epoch % cfg.log_every == 0)
            res.history.push_back({epoch, l1, l2, totalloss});
        if (l1 < cfg.target_l1 && l2 == 0.0) {
            res.reached_targets = true;
            break;
        }

        g1.axpy(cfg.nu, g2.grads);
        detail::flatten_grads(g1, grads);

        if (joint_phi) {
            for (double* prm : phi) {
                const double save = *prm;
                const double h = 1e-6 * std::max(1.0, std::abs(save));
                *prm = save + h;
                MatrixBounds mb = ncm_bounds(ncm, cfg.domain, cfg.grid_tau);
                MatrixBounds db = mdot_bounds(ncm, sys, cfg.domain, cfg.grid_tau);
                const double lp = detail::run_pipeline(controller, sys.g, mb, db, eta.eta).l2;
                *prm = save - h;
                mb = ncm_bounds(ncm, cfg.domain, cfg.grid_tau);
                db = mdot_bounds(ncm, sys, cfg.domain, cfg.grid_tau);
                const double lm = detail::run_pipeline(controller, sys.g, mb, db, eta.eta).l2;
                *prm = save;
                grads.push_back(cfg.nu * (lp - lm) / (2.0 * h));
            }
        }

        opt.step(all, grads);
    }

    if (res.history.empty() || res.history.back().epoch != last_epoch)
        res.history.push_back({last_epoch, l1, l2, l1 + cfg.nu * l2});

    res.controller = std::move(controller);
    res.ncm = std::move(ncm);
    res.final_l1 = l1;
    res.final_l2 = l2;
    res.eta = eta;
    return res;
}

} // namespace contrakt
