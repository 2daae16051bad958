#pragma once

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <utility>
#include <vector>

#include "density_learning.hpp"
#include "ep_finite.hpp"
#include "errors.hpp"
#include "site_ops.hpp"
#include "types.hpp"

namespace epsense {

/// Reduced row-echelon form of the noiseless constraint F w = y with full
/// pivoting: after a column permutation the system reads [I | G] w' = y'.
/// col_perm[pos] is the original column index at echelon position pos; the
/// first y_prime.size() positions are the dependent variables.
struct EchelonSystem {
    Matrix g;                   // M_eff x (N - M_eff)
    Vector y_prime;
    std::vector<int> col_perm;
    int dropped_rows = 0;       // redundant consistent rows removed
};

inline EchelonSystem row_echelon(const Matrix& f, const Vector& y) {
    const auto m0 = f.rows();
    const auto n = f.cols();
    if (n == 0) throw ParameterError("constraint matrix has no columns");
    if (y.size() != m0)
        throw ParameterError("constraint matrix and right-hand side disagree on M");

    Matrix aug(m0, n + 1);
    aug.leftCols(n) = f;
    aug.col(n) = y;
    std::vector<int> col_perm(static_cast<std::size_t>(n));
    std::iota(col_perm.begin(), col_perm.end(), 0);

    const double f_scale = (m0 > 0 && n > 0) ? f.cwiseAbs().maxCoeff() : 0.0;
    const double pivot_tol = 1e-10 * std::max(1.0, f_scale);

    Eigen::Index rank = 0;
    while (rank < m0 && rank < n) {
        Eigen::Index pi = rank, pj = rank;
        double best = 0.0;
        for (Eigen::Index i = rank; i < m0; ++i)
            for (Eigen::Index j = rank; j < n; ++j)
                if (std::abs(aug(i, j)) > best) { best = std::abs(aug(i, j)); pi = i; pj = j; }
        if (best <= pivot_tol) break;
        aug.row(rank).swap(aug.row(pi));
        if (pj != rank) {
            aug.col(rank).swap(aug.col(pj));
            std::swap(col_perm[static_cast<std::size_t>(rank)],
                      col_perm[static_cast<std::size_t>(pj)]);
        }
        aug.row(rank) /= aug(rank, rank);
        for (Eigen::Index i = 0; i < m0; ++i) {
            if (i == rank) continue;
            const double c = aug(i, rank);
            if (c != 0.0) aug.row(i) -= c * aug.row(rank);
        }
        ++rank;
    }

    const double y_tol = 1e-10 * std::max(1.0, (m0 > 0) ? y.cwiseAbs().maxCoeff() : 0.0);
    for (Eigen::Index i = rank; i < m0; ++i) {
        if (std::abs(aug(i, n)) > y_tol) {
            std::ostringstream msg;
            msg << "constraints are inconsistent: residual " << aug(i, n)
                << " on a rank-deficient row";
            throw NumericalError(msg.str());
        }
    }

    EchelonSystem out;
    out.g = aug.block(0, rank, rank, n - rank);
    out.y_prime = aug.col(n).head(rank);
    out.col_perm = std::move(col_perm);
    out.dropped_rows = static_cast<int>(m0 - rank);
    return out;
}

inline EchelonSystem row_echelon(const SensingMatrix& f, const Vector& y) {
    return row_echelon(f.entries, y);
}

/// Posterior blocks of the constrained Gaussian surrogate. Everything lives
/// in the (N - M)-dimensional independent subspace:
///   Sigma_i = (diag(1/d_i) + G^T diag(1/d_d) G)^-1
///   wbar_i  = Sigma_i (a_i/d_i + G^T ((y' - a_d)/d_d))
///   wbar_d  = y' - G wbar_i           (constraint, exact by construction)
///   sigma_d_diag = rowwise quadratic forms of G Sigma_i G^T.
struct SplitState {
    Vector a_d, d_d, a_i, d_i;
    Matrix sigma_i;             // (N - M) x (N - M); never the full N x N
    Vector wbar_i;
    Vector wbar_d;
    Vector sigma_d_diag;
};

inline SplitState zero_t_posterior(const EchelonSystem& ech, const Vector& a,
                                   const Vector& d) {
    const auto m = ech.y_prime.size();
    const auto ni = a.size() - m;
    if (ni < 1)
        throw ParameterError("zero_t_posterior needs at least one independent variable");
    if (d.size() != a.size() || ech.g.rows() != m || ech.g.cols() != ni)
        throw ParameterError("echelon system and site parameters disagree on dimensions");
    for (Eigen::Index i = 0; i < d.size(); ++i)
        if (!std::isfinite(d[i]) || d[i] == 0.0)
            throw ParameterError("site variances must be finite and nonzero");

    SplitState st;
    st.a_d = a.head(m);
    st.d_d = d.head(m);
    st.a_i = a.tail(ni);
    st.d_i = d.tail(ni);

    const Vector inv_dd = st.d_d.cwiseInverse();
    Matrix p = ech.g.transpose() * inv_dd.asDiagonal() * ech.g;
    p.diagonal() += st.d_i.cwiseInverse();
    Eigen::LLT<Matrix> llt(p);
    if (llt.info() != Eigen::Success) {
        std::ostringstream msg;
        msg << "independent-block factorization failed; diag(P) in ["
            << p.diagonal().minCoeff() << ", " << p.diagonal().maxCoeff() << "]";
        throw NumericalError(msg.str());
    }
    st.sigma_i = llt.solve(Matrix::Identity(ni, ni));
    const Vector rhs = st.a_i.cwiseQuotient(st.d_i)
                       + ech.g.transpose() * ((ech.y_prime - st.a_d).cwiseProduct(inv_dd));
    st.wbar_i = st.sigma_i * rhs;
    st.wbar_d = ech.y_prime - ech.g * st.wbar_i;
    const Matrix t = ech.g * st.sigma_i;
    st.sigma_d_diag = (t.array() * ech.g.array()).rowwise().sum();
    return st;
}

namespace detail {

inline Vector unpermute(const std::vector<int>& col_perm, const Vector& v) {
    Vector out(v.size());
    for (Eigen::Index pos = 0; pos < v.size(); ++pos)
        out[col_perm[static_cast<std::size_t>(pos)]] = v[pos];
    return out;
}

} // namespace detail

/// Zero-temperature EP: the noiseless likelihood becomes the hard constraint
/// F w = y, handled exactly through the echelon split. Sweep structure, site
/// operations and the optional density-learning step match run_ep; only the
/// posterior refresh differs, and no N x N system is ever factorized.
inline EPResult run_ep_zero_t(const SensingProblem& problem, const PriorParams& prior,
                              const EPConfig& cfg, const SweepObserver& observer = nullptr) {
    validate_prior(prior);
    validate_ep_config(cfg);
    if (problem.noise_variance != 0.0)
        throw ParameterError("zero-temperature solver requires noise_variance == 0");
    const Matrix& f = problem.matrix.entries;
    const Vector& y = problem.y;
    const auto n = f.cols();

    const EchelonSystem ech = row_echelon(f, y);
    const auto m = ech.y_prime.size();
    const auto ni = n - m;

    if (ni == 0) {
        // Full column rank: the constraints pin w completely.
        EPResult result;
        result.mean = detail::unpermute(ech.col_perm, ech.y_prime);
        result.variance = Vector::Zero(n);
        result.converged = true;
        result.sweeps_used = 0;
        result.final_eps = 0.0;
        result.site_a = Vector::Constant(n, cfg.init_a);
        result.site_d = Vector::Constant(n, cfg.init_d.value_or(prior.lambda));
        if (cfg.learn_rho) result.rho_learned = prior.rho;
        return result;
    }

    Vector a = Vector::Constant(n, cfg.init_a);
    Vector d = Vector::Constant(n, cfg.init_d.value_or(prior.lambda));
    Vector m1_prev = Vector::Zero(n), m2_prev = Vector::Zero(n);
    bool have_prev = false;
    double rho = prior.rho;

    EPResult result;
    result.final_eps = std::numeric_limits<double>::infinity();

    for (int sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
        const SplitState st = zero_t_posterior(ech, a, d);
        Vector wbar(n), sigma_diag(n);
        wbar << st.wbar_d, st.wbar_i;
        sigma_diag << st.sigma_d_diag, st.sigma_i.diagonal();

        const PriorParams sweep_prior{rho, prior.lambda};
        detail::SweepOutcome oc = detail::sweep_sites(sigma_diag, wbar, a, d, m1_prev,
                                                      m2_prev, have_prev, sweep_prior, cfg);
        const double eps = have_prev
            ? sweep_error(oc.m1, m1_prev, oc.m2, m2_prev)
            : std::numeric_limits<double>::infinity();

        if (observer) {
            const Vector va = detail::unpermute(ech.col_perm, a);
            const Vector vd = detail::unpermute(ech.col_perm, d);
            const Vector vw = detail::unpermute(ech.col_perm, wbar);
            const Vector vs = detail::unpermute(ech.col_perm, sigma_diag);
            const Vector v1 = detail::unpermute(ech.col_perm, oc.m1);
            const Vector v2 = detail::unpermute(ech.col_perm, oc.m2);
            observer(SweepView{sweep, va, vd, vw, vs, v1, v2, eps});
        }

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

    result.mean = detail::unpermute(ech.col_perm, m1_prev);
    result.variance = detail::unpermute(
        ech.col_perm, (m2_prev - m1_prev.cwiseProduct(m1_prev)).cwiseMax(0.0).eval());
    result.site_a = detail::unpermute(ech.col_perm, a);
    result.site_d = detail::unpermute(ech.col_perm, d);
    if (cfg.learn_rho) result.rho_learned = rho;
    return result;
}

} // namespace epsense
