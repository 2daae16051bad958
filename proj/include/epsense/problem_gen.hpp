#pragma once

#include <Eigen/Dense>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "epsense/errors.hpp"
#include "epsense/rng.hpp"
#include "epsense/types.hpp"

namespace epsense {

namespace detail {

/// Numerical row rank via column-pivoted QR, pivots below 1e-10 * ||F|| count as zero.
inline int row_rank(const Matrix& f) {
    Eigen::ColPivHouseholderQR<Matrix> qr(f.transpose());
    const double tol = 1e-10 * std::max(f.norm(), 1e-300);
    const auto& r = qr.matrixR();
    int rank = 0;
    const int k = static_cast<int>(std::min(f.rows(), f.cols()));
    for (int i = 0; i < k; ++i) {
        if (std::abs(r(i, i)) > tol) ++rank;
    }
    return rank;
}

inline Matrix standard_normal_matrix(int rows, int cols, std::mt19937_64& eng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = normal(eng);
    return m;
}

} // namespace detail

inline int nonzero_count(int n, double rho) {
    return static_cast<int>(std::llround(rho * static_cast<double>(n)));
}

inline SparseSignal gen_sparse_signal(int n, double rho, double lambda, std::uint64_t seed) {
    if (n <= 0) throw ParameterError("gen_sparse_signal: N must be positive");
    if (!(rho > 0.0 && rho <= 1.0)) throw ParameterError("gen_sparse_signal: rho must lie in (0,1]");
    if (!(lambda > 0.0)) throw ParameterError("gen_sparse_signal: lambda must be positive");
    const int k = nonzero_count(n, rho);
    if (k < 1) throw ParameterError("gen_sparse_signal: round(rho*N) must be at least 1");

    auto eng = make_engine(seed);
    // Support: partial Fisher-Yates over 0..N-1.
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < k; ++i) {
        std::uniform_int_distribution<int> pick(i, n - 1);
        std::swap(idx[i], idx[pick(eng)]);
    }
    std::vector<int> support(idx.begin(), idx.begin() + k);
    std::sort(support.begin(), support.end());

    std::normal_distribution<double> slab(0.0, std::sqrt(lambda));
    SparseSignal s;
    s.values = Vector::Zero(n);
    s.support = std::move(support);
    s.rho_true = rho;
    s.lambda_true = lambda;
    for (int i : s.support) s.values[i] = slab(eng);
    return s;
}

inline SensingMatrix gen_iid_matrix(int m, int n, std::uint64_t seed) {
    if (m < 1 || n < 1) throw ParameterError("gen_iid_matrix: dimensions must be positive");
    if (m > n) throw ParameterError("gen_iid_matrix: M > N not supported by the generator");

    for (int attempt = 0; attempt < 8; ++attempt) {
        auto eng = make_engine(attempt == 0 ? seed : derive_seed(seed, 0xA11C + attempt));
        SensingMatrix f;
        f.entries = detail::standard_normal_matrix(m, n, eng);
        f.kind = MatrixKind::IID;
        if (detail::row_rank(f.entries) == m) return f;
    }
    throw NumericalError("gen_iid_matrix: repeated rank deficiency (should be impossible)");
}

/// Covariance S = Y^T Y + Delta with Y (k x N) standard normal and Delta a
/// positive diagonal (half-normal entries floored at 1e-6). Exposed separately
/// so the construction itself is testable.
struct CorrelatedCovariance {
    Matrix s;
    Matrix y_factor;    // k x N
    Vector delta;       // N
};

inline CorrelatedCovariance gen_correlated_covariance(int n, int k, std::uint64_t seed) {
    auto eng = make_engine(seed);
    CorrelatedCovariance c;
    c.y_factor = detail::standard_normal_matrix(k, n, eng);
    std::normal_distribution<double> normal(0.0, 1.0);
    c.delta = Vector(n);
    for (int i = 0; i < n; ++i) c.delta[i] = std::max(std::abs(normal(eng)), 1e-6);
    c.s = c.y_factor.transpose() * c.y_factor;
    c.s.diagonal() += c.delta;
    return c;
}

inline SensingMatrix gen_correlated_matrix(int m, int n, int k, std::uint64_t seed) {
    if (m < 1 || n < 1) throw ParameterError("gen_correlated_matrix: dimensions must be positive");
    if (m > n) throw ParameterError("gen_correlated_matrix: M > N not supported by the generator");
    if (k < 0 || k > n) throw ParameterError("gen_correlated_matrix: k must lie in [0, N]");

    for (int attempt = 0; attempt < 8; ++attempt) {
        const std::uint64_t s0 = attempt == 0 ? seed : derive_seed(seed, 0xA11C + attempt);
        CorrelatedCovariance cov = gen_correlated_covariance(n, k, derive_seed(s0, 1));
        Eigen::LLT<Matrix> llt(cov.s);
        if (llt.info() != Eigen::Success)
            throw NumericalError("gen_correlated_matrix: Cholesky of S failed despite Delta floor");
        // Rows are independent draws from N(0, S): row = L z with S = L L^T.
        auto eng = make_engine(derive_seed(s0, 2));
        Matrix z = detail::standard_normal_matrix(m, n, eng);
        SensingMatrix f;
        f.entries = z * llt.matrixL().transpose();
        f.kind = MatrixKind::Correlated;
        f.correlation_rank = k;
        f.row_covariance = std::move(cov.s);
        if (detail::row_rank(f.entries) == m) return f;
    }
    throw NumericalError("gen_correlated_matrix: repeated rank deficiency (should be impossible)");
}

inline SensingProblem measure(const SensingMatrix& f, const SparseSignal& w, double noise_variance,
                              std::uint64_t seed) {
    if (f.cols() != w.size())
        throw ParameterError("measure: matrix columns do not match signal length");
    if (noise_variance < 0.0) throw ParameterError("measure: noise variance must be nonnegative");

    SensingProblem p;
    p.matrix = f;
    p.y = f.entries * w.values;
    if (noise_variance > 0.0) {
        auto eng = make_engine(seed);
        std::normal_distribution<double> noise(0.0, std::sqrt(noise_variance));
        for (int i = 0; i < p.y.size(); ++i) p.y[i] += noise(eng);
    }
    p.truth = w;
    p.noise_variance = noise_variance;
    p.seed = seed;
    return p;
}

/// Bundles the generators: one root seed split into signal / matrix / noise streams.
inline SensingProblem make_problem(int n, int m, double rho, double lambda, std::uint64_t root_seed,
                                   std::optional<int> correlated_k = std::nullopt,
                                   double noise_variance = 0.0) {
    SparseSignal w = gen_sparse_signal(n, rho, lambda, derive_seed(root_seed, kStreamSignal));
    SensingMatrix f = correlated_k
                          ? gen_correlated_matrix(m, n, *correlated_k, derive_seed(root_seed, kStreamMatrix))
                          : gen_iid_matrix(m, n, derive_seed(root_seed, kStreamMatrix));
    SensingProblem p = measure(f, w, noise_variance, derive_seed(root_seed, kStreamNoise));
    p.seed = root_seed;
    return p;
}

} // namespace epsense
