#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "errors.hpp"
#include "spike_slab.hpp"
#include "types.hpp"

namespace epsense {

// A cavity whose precision correction would flip sign beyond this margin is
// treated as invalid for the sweep (the site keeps its previous parameters).
inline constexpr double kCavityDenFloor = 1e-12;

// Placeholder used where a cavity could not be formed: wide enough to be
// inert in the density gradient, finite enough to stay in range.
inline constexpr double kFlatCavityVariance = 1e12;

/// Cavity marginal of site n from the current posterior diagonal and the
/// site's own factor, via the rank-one downdate
///   Sigma' = Sigma_nn / (1 - Sigma_nn/d),  wb' = (wbar - Sigma_nn a/d) / (1 - Sigma_nn/d).
/// Returns nullopt when the denominator is decisively negative (the site
/// factor carries more precision than the whole posterior admits).
inline std::optional<CavityMarginal> cavity_params(double sigma_nn, double wbar_n,
                                                   double a_n, double d_n) {
    const double den = 1.0 - sigma_nn / d_n;
    if (den <= -kCavityDenFloor) return std::nullopt;
    const double r = 1.0 / std::max(den, kCavityDenFloor);
    CavityMarginal cav;
    cav.variance = std::max(r * sigma_nn, kSigmaCavityFloor);
    cav.mean = r * (wbar_n - sigma_nn * a_n / d_n);
    return cav;
}

struct SiteParams {
    double a = 0.0;
    double d = 0.0;
};

/// Moment matching for one site: choose (a, d) so the Gaussian cavity times
/// N(w; a, d) reproduces the tilted mean and variance. The update is clamped
/// in the precision domain, so a tilted variance exceeding the cavity's
/// (negative true site precision) lands on d_max. A nonpositive tilted
/// variance is the skip-update signal and yields nullopt.
inline std::optional<SiteParams> moment_match_site(const TiltedMoments& t,
                                                   const CavityMarginal& cavity,
                                                   double d_min, double d_max) {
    const double vt = t.m2 - t.m1 * t.m1;
    if (!(vt > 0.0)) return std::nullopt;
    const double sp = std::max(cavity.variance, kSigmaCavityFloor);
    const double prec = std::clamp(1.0 / vt - 1.0 / sp, 1.0 / d_max, 1.0 / d_min);
    SiteParams out;
    out.d = 1.0 / prec;
    out.a = t.m1 + (out.d / sp) * (t.m1 - cavity.mean);
    return out;
}

/// Marginal the posterior would assign to a site with factor N(w; a, d) on
/// top of the given cavity — the inverse of cavity extraction.
inline CavityMarginal site_posterior_moments(const CavityMarginal& cavity,
                                             double a, double d) {
    const double sp = std::max(cavity.variance, kSigmaCavityFloor);
    const double var = 1.0 / (1.0 / sp + 1.0 / d);
    CavityMarginal out;
    out.variance = var;
    out.mean = var * (cavity.mean / sp + a / d);
    return out;
}

/// Convergence measure between consecutive sweeps:
///   max_n ( |m1_new - m1_old| + |m2_new - m2_old| ).
inline double sweep_error(const Vector& m1_new, const Vector& m1_old,
                          const Vector& m2_new, const Vector& m2_old) {
    if (m1_new.size() != m1_old.size() || m2_new.size() != m2_old.size() ||
        m1_new.size() != m2_new.size())
        throw ParameterError("sweep_error: moment vectors must share one length");
    return ((m1_new - m1_old).cwiseAbs() + (m2_new - m2_old).cwiseAbs()).maxCoeff();
}

namespace detail {

struct SweepOutcome {
    Vector a_next;
    Vector d_next;
    Vector m1;
    Vector m2;
    std::vector<CavityMarginal> cavities;   // flat placeholder where no cavity exists
    long negative_cavity_skips = 0;
};

/// One parallel sweep over all sites: every site reads the same posterior
/// (sigma_diag, wbar) built from (a, d); updates are staged in the returned
/// vectors and must be committed by the caller only after the whole loop.
inline SweepOutcome sweep_sites(const Vector& sigma_diag, const Vector& wbar,
                                const Vector& a, const Vector& d,
                                const Vector& m1_prev, const Vector& m2_prev,
                                bool have_prev, const PriorParams& prior,
                                const EPConfig& cfg) {
    const int n = static_cast<int>(a.size());
    SweepOutcome out;
    out.a_next = a;
    out.d_next = d;
    out.m1.setZero(n);
    out.m2.setZero(n);
    out.cavities.assign(static_cast<std::size_t>(n), CavityMarginal{0.0, kFlatCavityVariance});

    for (int i = 0; i < n; ++i) {
        auto cav = cavity_params(sigma_diag[i], wbar[i], a[i], d[i]);
        if (!cav) {
            ++out.negative_cavity_skips;
            if (have_prev) { out.m1[i] = m1_prev[i]; out.m2[i] = m2_prev[i]; }
            continue;
        }
        out.cavities[static_cast<std::size_t>(i)] = *cav;
        const TiltedMoments t = tilted_moments(*cav, prior);
        out.m1[i] = t.m1;
        out.m2[i] = t.m2;
        auto site = moment_match_site(t, *cav, cfg.d_min, cfg.d_max);
        if (!site) continue;    // degenerate tilted variance: keep old factor
        out.a_next[i] = (1.0 - cfg.damping) * site->a + cfg.damping * a[i];
        out.d_next[i] = (1.0 - cfg.damping) * site->d + cfg.damping * d[i];
    }
    return out;
}

} // namespace detail
} // namespace epsense
