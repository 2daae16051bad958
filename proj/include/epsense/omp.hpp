#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "errors.hpp"
#include "types.hpp"

namespace epsense {

struct OMPConfig {
    int max_atoms = 0;          // <= 0: round(rho N) when the truth is known, else M
    double residual_tol = 1e-9; // relative to abs |y|; stop when reached
};

/// Orthogonal matching pursuit: greedy atom selection on column-normalized
/// correlations with a full least-squares refit of the active set on the
/// original (unnormalized) columns, so output coefficients need no rescaling.
/// Stops on the residual tolerance, the atom budget, or a rank-deficient
/// active set (the offending atom is dropped).
inline Vector omp_reconstruct(const Matrix& f, const Vector& y, const OMPConfig& cfg_in,
                              double rho_hint = -1.0) {
    const auto m = f.rows();
    const auto n = f.cols();
    if (n == 0) throw ParameterError("measurement matrix has no columns");
    if (y.size() != m)
        throw ParameterError("measurement matrix and observations disagree on M");

    Vector col_norms(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        col_norms[j] = f.col(j).norm();
        if (!(col_norms[j] > 0.0))
            throw ParameterError("measurement matrix has a zero column");
    }

    int max_atoms = cfg_in.max_atoms;
    if (max_atoms <= 0) {
        max_atoms = (rho_hint > 0.0)
            ? static_cast<int>(std::llround(rho_hint * static_cast<double>(n)))
            : static_cast<int>(m);
    }
    max_atoms = std::min<int>(max_atoms, static_cast<int>(m));
    if (!(cfg_in.residual_tol >= 0.0))
        throw ParameterError("residual tolerance must be nonnegative");

    const double y_norm = y.norm();
    const double stop_norm = cfg_in.residual_tol * std::max(1.0, y_norm);

    Vector w = Vector::Zero(n);
    if (y_norm <= stop_norm || max_atoms == 0) return w;

    std::vector<Eigen::Index> active;
    std::vector<bool> in_active(static_cast<std::size_t>(n), false);
    Vector residual = y;
    Vector coeffs;

    while (static_cast<int>(active.size()) < max_atoms) {
        Eigen::Index best = -1;
        double best_score = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (in_active[static_cast<std::size_t>(j)]) continue;
            const double score = std::abs(f.col(j).dot(residual)) / col_norms[j];
            if (score > best_score) { best_score = score; best = j; }
        }
        if (best < 0) break;
        active.push_back(best);
        in_active[static_cast<std::size_t>(best)] = true;

        const auto k = static_cast<Eigen::Index>(active.size());
        Matrix fa(m, k);
        for (Eigen::Index c = 0; c < k; ++c)
            fa.col(c) = f.col(active[static_cast<std::size_t>(c)]);
        Eigen::ColPivHouseholderQR<Matrix> qr(fa);
        if (qr.rank() < k) {
            active.pop_back();  // new atom is linearly dependent on the set
            break;
        }
        coeffs = qr.solve(y);
        residual = y - fa * coeffs;
        if (residual.norm() <= stop_norm) break;
    }

    for (std::size_t c = 0; c < active.size(); ++c)
        w[active[c]] = coeffs[static_cast<Eigen::Index>(c)];
    return w;
}

inline Vector omp_reconstruct(const SensingProblem& problem, const OMPConfig& cfg = {}) {
    const double rho_hint = problem.truth ? problem.truth->rho_true : -1.0;
    return omp_reconstruct(problem.matrix.entries, problem.y, cfg, rho_hint);
}

} // namespace epsense
