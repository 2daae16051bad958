#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "errors.hpp"
#include "types.hpp"

namespace epsense {

// Guard for positive-but-denormal cavity variances; nonpositive ones are a
// caller error and rejected outright.
inline constexpr double kSigmaCavityFloor = 1e-12;
inline constexpr double kLog2Pi = 1.8378770664093454836;

/// log N(x; 0, v) for v > 0.
inline double log_normal_pdf0(double x, double v) {
    return -0.5 * (kLog2Pi + std::log(v) + x * x / v);
}

inline void validate_prior(const PriorParams& prior) {
    if (!(prior.lambda > 0.0) || !std::isfinite(prior.lambda))
        throw ParameterError("slab variance lambda must be positive and finite");
    if (!(prior.rho >= 0.0 && prior.rho <= 1.0))
        throw ParameterError("spike-and-slab weight rho must lie in [0, 1]");
}

/// Pointwise density of the prior: the weight of the atom at zero (only
/// nonzero when w == 0) and the absolutely continuous slab part rho*N(w;0,lambda).
struct PriorPointwise {
    double spike_weight = 0.0;
    double slab_density = 0.0;
};

inline PriorPointwise prior_density_pointwise(double w, const PriorParams& prior) {
    validate_prior(prior);
    if (!std::isfinite(w)) throw ParameterError("prior evaluated at non-finite point");
    PriorPointwise out;
    out.spike_weight = (w == 0.0) ? (1.0 - prior.rho) : 0.0;
    out.slab_density = prior.rho * std::exp(log_normal_pdf0(w, prior.lambda));
    return out;
}

/// Posterior probability that the site is drawn from the slab, given a
/// Gaussian cavity. Computed in the log domain; exact at rho in {0, 1}.
inline double slab_probability(const CavityMarginal& cavity, const PriorParams& prior) {
    validate_prior(prior);
    if (!(cavity.variance > 0.0))
        throw ParameterError("nonpositive cavity variance");
    const double sp = std::max(cavity.variance, kSigmaCavityFloor);
    if (prior.rho <= 0.0) return 0.0;
    if (prior.rho >= 1.0) return 1.0;
    const double ls = std::log1p(-prior.rho) + log_normal_pdf0(cavity.mean, sp);
    const double ll = std::log(prior.rho) + log_normal_pdf0(cavity.mean, prior.lambda + sp);
    const double hi = std::max(ls, ll);
    return std::exp(ll - hi) / (std::exp(ls - hi) + std::exp(ll - hi));
}

/// Partition value and first two moments of the tilted marginal
///   q(w) proportional to N(w; cavity.mean, cavity.variance) * prior(w).
/// The spike contributes a point mass at zero, the slab a Gaussian with
/// moments  m = lambda*wb/(lambda+sp),  v = lambda*sp/(lambda+sp).
inline TiltedMoments tilted_moments(const CavityMarginal& cavity, const PriorParams& prior) {
    validate_prior(prior);
    if (!std::isfinite(cavity.mean) || !std::isfinite(cavity.variance))
        throw ParameterError("non-finite cavity parameters");
    if (!(cavity.variance > 0.0))
        throw ParameterError("nonpositive cavity variance");
    const double sp = std::max(cavity.variance, kSigmaCavityFloor);
    const double wb = cavity.mean;
    const double lam = prior.lambda;

    const double log_gs = log_normal_pdf0(wb, sp);          // spike evidence
    const double log_gl = log_normal_pdf0(wb, lam + sp);    // slab evidence
    const double ninf = -std::numeric_limits<double>::infinity();
    const double ls = (prior.rho < 1.0) ? std::log1p(-prior.rho) + log_gs : ninf;
    const double ll = (prior.rho > 0.0) ? std::log(prior.rho) + log_gl : ninf;
    const double hi = std::max(ls, ll);
    const double es = std::exp(ls - hi);
    const double el = std::exp(ll - hi);
    const double p_slab = el / (es + el);

    const double m = lam * wb / (lam + sp);
    const double v = lam * sp / (lam + sp);

    TiltedMoments out;
    out.log_z = hi + std::log(es + el);
    out.m1 = p_slab * m;
    out.m2 = p_slab * (v + m * m);
    if (!std::isfinite(out.log_z) || !std::isfinite(out.m1) || !std::isfinite(out.m2))
        throw NumericalError("tilted moment computation produced a non-finite value");
    return out;
}

/// Slab component of the prior density at w (no spike atom).
inline double slab_density(double w, const PriorParams& prior) {
    validate_prior(prior);
    return prior.rho * std::exp(log_normal_pdf0(w, prior.lambda));
}

} // namespace epsense
