#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "contrakt/ibp.hpp"
#include "contrakt/linalg.hpp"
#include "contrakt/mat.hpp"
#include "contrakt/ncm.hpp"
#include "contrakt/nn.hpp"
#include "contrakt/systems.hpp"

namespace contrakt {

/// The closed-loop equilibrium residual ||f(x*) + g u(x*)|| exceeded the
/// configured threshold, so the certificate precondition fails.
struct EquilibriumError : std::runtime_error {
    double residual;
    explicit EquilibriumError(double r)
        : std::runtime_error("equilibrium residual " + std::to_string(r) +
                             " exceeds the certification threshold"),
          residual(r) {}
};

struct GershgorinResult {
    bool pass = false;
    Vec row_margins;
};

/// Gershgorin disc test on element-wise bounds: row i margin is
///   -sum_{j!=i} max(|L_ij+L_ji|, |U_ij+U_ji|) - 2 U_ii - shift.
/// All margins >= 0 guarantees Y + Y^T <= -shift * I for every Y within the
/// bounds (sound for any sign of the shift).
inline GershgorinResult gershgorin_check(const MatrixBounds& b, double shift) {
    if (b.rows() != b.cols()) throw std::invalid_argument("gershgorin_check: bounds not square");
    const std::size_t n = b.rows();
    GershgorinResult out;
    out.row_margins.resize(n);
    out.pass = true;
    for (std::size_t i = 0; i < n; ++i) {
        double radius = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            radius += std::max(std::abs(b.lo(i, j) + b.lo(j, i)),
                               std::abs(b.hi(i, j) + b.hi(j, i)));
        }
        out.row_margins[i] = -radius - 2.0 * b.hi(i, i) - shift;
        if (out.row_margins[i] < 0.0) out.pass = false;
    }
    return out;
}

struct EtaResult {
    double eta = 0.0; // -(c1 + c2)
    double c1 = 0.0;  // >= 2 rho sup lambda_max(M)
    double c2 = 0.0;  // >= sup lambda_max(Sym[M jac_f]); may be negative
    double grid_tau = 0.0;
    double c1_margin = 0.0;
    double c2_margin = 0.0;
};

/// Uniform eigenvalue budgets c1, c2 for the certificate, by dense gridding with Lipschitz
/// widening: the sup of lambda_max(Sym[M jac_f]) has Lipschitz constant
/// 2 (S_M L_df + S_df L_M); the constants are estimated from grid maxima of
/// norms and finite-difference quotients times a 1.5 safety factor.
inline EtaResult compute_eta(const SystemModel& sys, const NcmParams& ncm, double rho,
                             const Box& domain, double grid_tau) {
    if (!(rho >= 0.0)) throw std::invalid_argument("compute_eta: rho must be >= 0");
    const GridSpec grid(domain, grid_tau);

    double max_lam_m = -std::numeric_limits<double>::infinity();
    double max_lam_sym = -std::numeric_limits<double>::infinity();
    double s_m = 0.0, s_df = 0.0; // norm bounds S_M, S_{df}
    std::vector<Mat> Ms(grid.total()), Js(grid.total());
    for (std::size_t t = 0; t < grid.total(); ++t) {
        const Vec x = grid.point(t);
        Ms[t] = ncm_eval(ncm, x);
        Js[t] = sys.jac_f(x);
        if (!all_finite(Js[t]) || !all_finite(Ms[t]))
            throw std::runtime_error("compute_eta: non-finite dynamics on grid point");
        const double lam_m = sym_eig_max(Ms[t]);
        max_lam_m = std::max(max_lam_m, lam_m);
        max_lam_sym = std::max(max_lam_sym, sym_eig_max(sym(Ms[t] * Js[t])));
        s_m = std::max(s_m, lam_m); // M symmetric PD: ||M||_2 = lambda_max
        s_df = std::max(s_df, spectral_norm(Js[t]));
    }

    // Lipschitz estimates from axis-adjacent finite differences.
    double l_m = 0.0, l_df = 0.0;
    for (std::size_t t = 0; t < grid.total(); ++t) {
        std::size_t rem = t, stride = 1;
        for (std::size_t d = 0; d < grid.counts.size(); ++d) {
            const std::size_t idx = rem % grid.counts[d];
            rem /= grid.counts[d];
            if (idx + 1 < grid.counts[d]) {
                const std::size_t t2 = t + stride;
                l_m = std::max(l_m, frobenius_norm(Ms[t2] - Ms[t]) / grid.spacing[d]);
                l_df = std::max(l_df, frobenius_norm(Js[t2] - Js[t]) / grid.spacing[d]);
            }
            stride *= grid.counts[d];
        }
    }
    l_m *= 1.5;
    l_df *= 1.5;

    EtaResult out;
    out.grid_tau = grid.covering_radius;
    out.c1_margin = l_m * grid.covering_radius;
    out.c2_margin = 2.0 * (s_m * l_df + s_df * l_m) * grid.covering_radius;
    out.c1 = 2.0 * rho * (max_lam_m + out.c1_margin);
    out.c2 = max_lam_sym + out.c2_margin;
    out.eta = -(out.c1 + out.c2);
    return out;
}

struct CertifyOptions {
    double rho = 0.5;
    double grid_tau = 0.05;
    double equilibrium_threshold = 1e-4;
    std::size_t oracle_samples = 1000;
    std::uint64_t oracle_seed = 2024;
};

/// Everything the Gershgorin certificate produced, plus the sampled
/// pointwise contraction-inequality margin for cross-reference.
struct CertificateReport {
    double eta = 0.0;
    double c1 = 0.0;
    double c2 = 0.0;
    Vec row_margins;
    bool pass = false;
    double rho = 0.0;
    double oracle_min_margin = 0.0;
    double equilibrium_residual = 0.0;
    double grid_tau = 0.0;
};

/// Pointwise contraction-inequality margin at given samples:
///   min_x -lambda_max( Mdot + Sym[M (jac_f + g du/dx)] + 2 rho M ).
/// Positive means the contraction inequality holds at every sample.
inline double theorem1_oracle(const SystemModel& sys, const NcmParams& ncm,
                              const MlpParams& controller, double rho,
                              const std::vector<Vec>& samples) {
    double worst = std::numeric_limits<double>::infinity();
    for (const Vec& x : samples) {
        const Mat M = ncm_eval(ncm, x);
        const Mat A = sys.jac_f(x) + sys.g * mlp_input_jacobian(controller, x);
        const Mat lhs = mdot_eval(ncm, sys, x, mlp_forward(controller, x)) + sym(M * A) +
                        (2.0 * rho) * M;
        worst = std::min(worst, -sym_eig_max(lhs));
    }
    return worst;
}

/// Assemble the full Gershgorin certificate: eta from compute_eta, element-wise
/// bounds from the IBP pipeline, and the row test with eta entering each
/// margin additively as the shift.
inline CertificateReport certify(const SystemModel& sys, const NcmParams& ncm,
                                 const MlpParams& controller, const Vec& x_star,
                                 const Box& domain, const CertifyOptions& opt) {
    controller.validate();
    const Vec u_star = mlp_forward(controller, x_star);
    const double resid = norm2(sys.f(x_star) + sys.g * u_star);
    if (!(resid <= opt.equilibrium_threshold)) throw EquilibriumError(resid);

    const EtaResult eta = compute_eta(sys, ncm, opt.rho, domain, opt.grid_tau);
    const MatrixBounds mb = ncm_bounds(ncm, domain, opt.grid_tau);
    const MatrixBounds mdb = mdot_bounds(ncm, sys, domain, opt.grid_tau);
    const MatrixBounds lhs = theorem2_lhs_bounds(mb, sys.g, controller, mdb);
    const GershgorinResult gr = gershgorin_check(lhs, eta.eta);

    CertificateReport rep;
    rep.eta = eta.eta;
    rep.c1 = eta.c1;
    rep.c2 = eta.c2;
    rep.row_margins = gr.row_margins;
    rep.pass = gr.pass;
    rep.rho = opt.rho;
    rep.equilibrium_residual = resid;
    rep.grid_tau = eta.grid_tau;

    Rng rng(opt.oracle_seed);
    std::vector<Vec> samples;
    samples.reserve(opt.oracle_samples);
    for (std::size_t i = 0; i < opt.oracle_samples; ++i) samples.push_back(rng.in_box(domain));
    rep.oracle_min_margin = theorem1_oracle(sys, ncm, controller, opt.rho, samples);
    return rep;
}

/// Robustness margin under model error: for an estimated Jacobian jac_est and
/// any perturbation Delta with Delta^T Delta <= c I, a positive
///   -lambda_max( Mdot + Sym[M jac_est] + lambda^2 M^T M + (c/lambda^2) I + rho M )
/// certifies exponential convergence of the perturbed variational system at
/// rate rho in the metric M.
inline double robust_check(const Mat& M, const Mat& jac_est, const Mat& mdot, double lambda,
                           double c, double rho) {
    if (lambda == 0.0) throw std::invalid_argument("robust_check: lambda must be nonzero");
    if (c < 0.0) throw std::invalid_argument("robust_check: c must be >= 0");
    const std::size_t n = M.rows;
    Mat lhs = mdot + sym(M * jac_est) + (lambda * lambda) * (transpose(M) * M) + rho * M;
    for (std::size_t i = 0; i < n; ++i) lhs(i, i) += c / (lambda * lambda);
    return -sym_eig_max(lhs);
}

} // namespace contrakt
