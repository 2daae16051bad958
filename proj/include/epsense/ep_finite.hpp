#pragma once

#include <cmath>
#include <limits>
#include <sstream>

#include "density_learning.hpp"
#include "errors.hpp"
#include "site_ops.hpp"
#include "spike_slab.hpp"
#include "types.hpp"

namespace epsense {

inline void validate_ep_config(const EPConfig& cfg) {
    if (!(cfg.beta > 0.0) || !std::isfinite(cfg.beta))
        throw ParameterError("beta must be positive and finite");
    if (cfg.max_sweeps < 1) throw ParameterError("max_sweeps must be at least 1");
    if (!(cfg.tol > 0.0)) throw ParameterError("tol must be positive");
    if (!(cfg.damping >= 0.0 && cfg.damping < 1.0))
        throw ParameterError("damping must lie in [0, 1)");
    if (!(cfg.d_min > 0.0 && cfg.d_min < cfg.d_max))
        throw ParameterError("site variance bounds require 0 < d_min < d_max");
    if (!(cfg.eta > 0.0)) throw ParameterError("eta must be positive");
    if (!(cfg.rho_min > 0.0 && cfg.rho_min < 0.5))
        throw ParameterError("rho_min must lie in (0, 0.5)");
    if (cfg.init_d && !(*cfg.init_d > 0.0))
        throw ParameterError("init_d must be positive");
}

struct PosteriorParams {
    Matrix sigma;
    Vector wbar;
};

/// Gaussian posterior of the surrogate model:
///   Sigma = (beta F^T F + diag(1/d))^-1,  wbar = Sigma (beta F^T y + a/d).
/// Site variances may be negative individually as long as the total
/// precision stays positive definite (checked via the Cholesky factor).
inline PosteriorParams posterior_params(const Matrix& f, const Vector& y,
                                        const Vector& a, const Vector& d,
                                        double beta) {
    const auto n = a.size();
    if (n == 0 || d.size() != n)
        throw ParameterError("site parameters a and d must share a nonzero length");
    if (f.cols() != n || f.rows() != y.size())
        throw ParameterError("measurement dimensions do not match the site parameters");
    if (!(beta > 0.0)) throw ParameterError("beta must be positive");
    for (Eigen::Index i = 0; i < n; ++i)
        if (!std::isfinite(d[i]) || d[i] == 0.0)
            throw ParameterError("site variances must be finite and nonzero");

    Matrix p = beta * (f.transpose() * f);
    p.diagonal() += d.cwiseInverse();
    Eigen::LLT<Matrix> llt(p);
    if (llt.info() != Eigen::Success) {
        std::ostringstream msg;
        msg << "posterior precision factorization failed; diag(P) in ["
            << p.diagonal().minCoeff() << ", " << p.diagonal().maxCoeff() << "]";
        throw NumericalError(msg.str());
    }
    PosteriorParams out;
    out.sigma = llt.solve(Matrix::Identity(n, n));
    out.wbar = out.sigma * (beta * (f.transpose() * y) + a.cwiseQuotient(d));
    return out;
}

/// Finite-temperature EP with a parallel update schedule: each sweep refreshes
/// the posterior once, computes every site's cavity and tilted moments against
/// that same posterior, and commits all staged site updates together.
inline EPResult run_ep(const Matrix& f, const Vector& y, const PriorParams& prior,
                       const EPConfig& cfg, const SweepObserver& observer = nullptr) {
    validate_prior(prior);
    validate_ep_config(cfg);
    const auto n = f.cols();
    if (n == 0) throw ParameterError("measurement matrix has no columns");
    if (f.rows() != y.size())
        throw ParameterError("measurement matrix and observations disagree on M");

    const Matrix gram = cfg.beta * (f.transpose() * f);
    const Vector b0 = cfg.beta * (f.transpose() * y);

    Vector a = Vector::Constant(n, cfg.init_a);
    Vector d = Vector::Constant(n, cfg.init_d.value_or(prior.lambda));
    Vector m1_prev = Vector::Zero(n), m2_prev = Vector::Zero(n);
    bool have_prev = false;
    double rho = prior.rho;

    EPResult result;
    result.final_eps = std::numeric_limits<double>::infinity();

    for (int sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
        Matrix p = gram;
        p.diagonal() += d.cwiseInverse();
        Eigen::LLT<Matrix> llt(p);
        if (llt.info() != Eigen::Success) {
            std::ostringstream msg;
            msg << "sweep " << sweep << ": posterior factorization failed; site d in ["
                << d.minCoeff() << ", " << d.maxCoeff() << "]";
            throw NumericalError(msg.str());
        }
        const Matrix sigma = llt.solve(Matrix::Identity(n, n));
        const Vector wbar = sigma * (b0 + a.cwiseQuotient(d));
        const Vector sigma_diag = sigma.diagonal();

        const PriorParams sweep_prior{rho, prior.lambda};
        detail::SweepOutcome oc = detail::sweep_sites(sigma_diag, wbar, a, d, m1_prev,
                                                      m2_prev, have_prev, sweep_prior, cfg);
        const double eps = have_prev
            ? sweep_error(oc.m1, m1_prev, oc.m2, m2_prev)
            : std::numeric_limits<double>::infinity();

        if (observer)
            observer(SweepView{sweep, a, d, wbar, sigma_diag, oc.m1, oc.m2, eps});

        a = oc.a_next;
        d = oc.d_next;
        m1_prev = oc.m1;
        m2_prev = oc.m2;
        have_prev = true;
        result.negative_cavity_skips += oc.negative_cavity_skips;
        result.sweeps_used = sweep;
        result.final_eps = eps;

        if (cfg.learn_rho) {
            if (cfg.rho_newton) {
                rho = rho_minimize(oc.cavities, prior.lambda, rho, cfg.rho_min);
            } else {
                const double grad = rho_derivatives(oc.cavities, sweep_prior).grad;
                rho = rho_step(rho, grad, cfg.eta, cfg.rho_min);
            }
        }
        if (eps < cfg.tol) {
            result.converged = true;
            break;
        }
    }

    result.mean = m1_prev;
    result.variance = (m2_prev - m1_prev.cwiseProduct(m1_prev)).cwiseMax(0.0);
    result.site_a = a;
    result.site_d = d;
    if (cfg.learn_rho) result.rho_learned = rho;
    return result;
}

inline EPResult run_ep(const SensingProblem& problem, const PriorParams& prior,
                       const EPConfig& cfg, const SweepObserver& observer = nullptr) {
    return run_ep(problem.matrix.entries, problem.y, prior, cfg, observer);
}

} // namespace epsense
