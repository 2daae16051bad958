#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "errors.hpp"
#include "site_ops.hpp"
#include "spike_slab.hpp"
#include "types.hpp"

namespace epsense {

/// Terms of the EP free energy F_EP = (N-1) log Z_Q - sum_n log Z_Q(n).
/// Site factors enter both partition values as unnormalized exponentials
/// exp(-(w-a_n)^2 / (2 d_n)); any per-site normalizer would cancel in f_ep,
/// and the unnormalized convention keeps every term real when a site
/// variance is negative (total precision still positive definite).
struct FreeEnergyTerms {
    double log_zq = 0.0;
    std::vector<double> log_zqn;
    double f_ep = 0.0;
};

struct RhoDerivatives {
    double grad = 0.0;
    double hess = 0.0;
};

/// d/drho and d2/drho2 of  -sum_n log[(1-rho) g_s(n) + rho g_l(n)], the only
/// rho-dependent part of the free energy. g_s/g_l are the spike and slab
/// evidences of each cavity; the ratio is evaluated in factored-exponential
/// form so widely separated evidences cannot overflow. The objective is
/// convex in rho: hess is a sum of squares.
inline RhoDerivatives rho_derivatives(const std::vector<CavityMarginal>& cavities,
                                      const PriorParams& prior) {
    validate_prior(prior);
    RhoDerivatives out;
    for (const auto& cav : cavities) {
        if (!(cav.variance > 0.0))
            throw ParameterError("nonpositive cavity variance");
        const double sp = std::max(cav.variance, kSigmaCavityFloor);
        const double log_gs = log_normal_pdf0(cav.mean, sp);
        const double log_gl = log_normal_pdf0(cav.mean, prior.lambda + sp);
        const double hi = std::max(log_gs, log_gl);
        const double es = std::exp(log_gs - hi);
        const double el = std::exp(log_gl - hi);
        const double frac = (es - el) / ((1.0 - prior.rho) * es + prior.rho * el);
        out.grad += frac;
        out.hess += frac * frac;
    }
    return out;
}

inline double clamp_rho(double rho, double rho_min) {
    return std::clamp(rho, rho_min, 1.0 - rho_min);
}

/// One projected gradient-descent step on the density weight.
inline double rho_step(double rho, double grad, double eta, double rho_min = 1e-6) {
    if (!(eta > 0.0)) throw ParameterError("learning rate eta must be positive");
    if (!(rho_min > 0.0 && rho_min < 0.5))
        throw ParameterError("rho_min must lie in (0, 0.5)");
    return clamp_rho(rho - eta * grad, rho_min);
}

/// Exact minimizer of the convex rho-objective for a fixed set of cavities:
/// Newton steps safeguarded by bisection on the gradient's bracket.
inline double rho_minimize(const std::vector<CavityMarginal>& cavities,
                           double lambda, double rho_init = 0.5,
                           double rho_min = 1e-6) {
    if (!(rho_min > 0.0 && rho_min < 0.5))
        throw ParameterError("rho_min must lie in (0, 0.5)");
    double lo = rho_min, hi = 1.0 - rho_min;
    auto grad_at = [&](double r) {
        return rho_derivatives(cavities, PriorParams{r, lambda}).grad;
    };
    if (grad_at(lo) >= 0.0) return lo;   // gradient increasing in rho (convexity)
    if (grad_at(hi) <= 0.0) return hi;
    double rho = clamp_rho(rho_init, rho_min);
    for (int iter = 0; iter < 200; ++iter) {
        const RhoDerivatives der = rho_derivatives(cavities, PriorParams{rho, lambda});
        if (der.grad > 0.0) hi = rho; else lo = rho;
        double next;
        if (der.hess > 0.0) {
            next = rho - der.grad / der.hess;
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        } else {
            next = 0.5 * (lo + hi);
        }
        if (std::abs(next - rho) < 1e-12 || hi - lo < 1e-12) return next;
        rho = next;
    }
    return rho;
}

namespace detail {

inline void check_free_energy_inputs(const EPState& state, const Matrix& f,
                                     const Vector& y, double beta) {
    const auto n = state.a.size();
    if (n == 0 || state.d.size() != n)
        throw ParameterError("state site parameters a and d must share a nonzero length");
    if (f.cols() != n || f.rows() != y.size())
        throw ParameterError("measurement dimensions do not match the state");
    if (!(beta > 0.0)) throw ParameterError("beta must be positive");
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!std::isfinite(state.a[i]) || !std::isfinite(state.d[i]) || state.d[i] == 0.0)
            throw ParameterError("site parameters must be finite with nonzero variance");
    }
}

} // namespace detail

/// log Z_Q for the Gaussian surrogate exp(-beta/2 |y-Fw|^2) * prod_n
/// exp(-(w-a_n)^2/(2 d_n)), integrated over w. Requires the total precision
/// beta F^T F + diag(1/d) to be positive definite; site variances may be
/// negative individually.
inline double log_partition_q(const Matrix& f, const Vector& y,
                              const Vector& a, const Vector& d, double beta) {
    EPState st;
    st.a = a;
    st.d = d;
    detail::check_free_energy_inputs(st, f, y, beta);
    const auto n = a.size();
    Matrix p = beta * (f.transpose() * f);
    p.diagonal() += d.cwiseInverse();
    Eigen::LLT<Matrix> llt(p);
    if (llt.info() != Eigen::Success)
        throw NumericalError("total precision matrix is not positive definite");
    const double log_det_p =
        2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    const Vector b = beta * (f.transpose() * y) + a.cwiseQuotient(d);
    const Vector wbar = llt.solve(b);
    return -0.5 * beta * y.squaredNorm() - 0.5 * a.cwiseProduct(a).cwiseQuotient(d).sum()
           + 0.5 * b.dot(wbar) + 0.5 * static_cast<double>(n) * kLog2Pi - 0.5 * log_det_p;
}

/// EP free energy of a state under the spike-and-slab prior. Only the site
/// parameters (a, d) of the state are read; the posterior is recomputed from
/// them. f_ep is evaluated in a cancellation-free form,
///   f_ep = 1/2 log det P + 1/2 (beta y^T y - b^T wbar)
///        + sum_n [ 1/2 log Sigma_nn - 1/2 log(2 pi sp_n)
///                  + wbar_n^2/(2 Sigma_nn) - wb'_n^2/(2 sp_n) - log z_n ],
/// in which the a_n^2/d_n contributions of log Z_Q and log Z_Q(n) have been
/// cancelled algebraically, so near-flat sites (large |a|, large d) do not
/// lose precision.
inline FreeEnergyTerms ep_free_energy(const EPState& state, const PriorParams& prior,
                                      double beta, const Matrix& f, const Vector& y) {
    validate_prior(prior);
    detail::check_free_energy_inputs(state, f, y, beta);
    const auto n = state.a.size();

    Matrix p = beta * (f.transpose() * f);
    p.diagonal() += state.d.cwiseInverse();
    Eigen::LLT<Matrix> llt(p);
    if (llt.info() != Eigen::Success)
        throw NumericalError("total precision matrix is not positive definite");
    const double log_det_p =
        2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    const Matrix sigma = llt.solve(Matrix::Identity(n, n));
    const Vector b = beta * (f.transpose() * y) + state.a.cwiseQuotient(state.d);
    const Vector wbar = sigma * b;

    FreeEnergyTerms out;
    out.log_zq = -0.5 * beta * y.squaredNorm()
                 - 0.5 * state.a.cwiseProduct(state.a).cwiseQuotient(state.d).sum()
                 + 0.5 * b.dot(wbar) + 0.5 * static_cast<double>(n) * kLog2Pi
                 - 0.5 * log_det_p;
    out.log_zqn.resize(static_cast<std::size_t>(n));
    out.f_ep = 0.5 * log_det_p + 0.5 * (beta * y.squaredNorm() - b.dot(wbar));

    for (Eigen::Index i = 0; i < n; ++i) {
        const double snn = sigma(i, i);
        auto cav = cavity_params(snn, wbar[i], state.a[i], state.d[i]);
        if (!cav)
            throw NumericalError("free energy undefined: negative-precision cavity");
        const double sp = cav->variance;
        const TiltedMoments t = tilted_moments(*cav, prior);
        const double corr = 0.5 * std::log(sp) - 0.5 * std::log(snn)
                            + cav->mean * cav->mean / (2.0 * sp)
                            - wbar[i] * wbar[i] / (2.0 * snn)
                            + state.a[i] * state.a[i] / (2.0 * state.d[i]) + t.log_z;
        out.log_zqn[static_cast<std::size_t>(i)] = out.log_zq + corr;
        out.f_ep += 0.5 * std::log(snn) - 0.5 * (kLog2Pi + std::log(sp))
                    + wbar[i] * wbar[i] / (2.0 * snn)
                    - cav->mean * cav->mean / (2.0 * sp) - t.log_z;
    }
    if (!std::isfinite(out.f_ep))
        throw NumericalError("free energy evaluation produced a non-finite value");
    return out;
}

/// Partial derivative of the free energy with respect to rho at fixed site
/// parameters, using the state's stored posterior. Sites whose cavity does
/// not exist contribute through an inert flat placeholder, matching the
/// solver's learning step.
inline double dfep_drho(const EPState& state, const PriorParams& prior) {
    if (!(prior.rho > 0.0 && prior.rho < 1.0))
        throw ParameterError("dfep_drho requires rho strictly inside (0, 1)");
    const auto n = state.a.size();
    if (state.wbar.size() != n || state.sigma.rows() != n || state.sigma.cols() != n)
        throw ParameterError("state posterior does not match the site parameters");
    std::vector<CavityMarginal> cavities(static_cast<std::size_t>(n),
                                         CavityMarginal{0.0, kFlatCavityVariance});
    for (Eigen::Index i = 0; i < n; ++i) {
        auto cav = cavity_params(state.sigma(i, i), state.wbar[i], state.a[i], state.d[i]);
        if (cav) cavities[static_cast<std::size_t>(i)] = *cav;
    }
    return rho_derivatives(cavities, prior).grad;
}

} // namespace epsense
