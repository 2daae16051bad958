#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

namespace epsense {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Sparse ground-truth signal: exactly round(rho_true * N) nonzero entries,
/// nonzeros drawn from N(0, lambda_true).
struct SparseSignal {
    Vector values;
    std::vector<int> support;           // indices of nonzero entries, sorted
    double rho_true = 0.0;
    double lambda_true = 1.0;

    int size() const { return static_cast<int>(values.size()); }
};

enum class MatrixKind { IID, Correlated };

struct SensingMatrix {
    Matrix entries;                     // M x N
    MatrixKind kind = MatrixKind::IID;
    int correlation_rank = 0;           // k of the low-rank part; meaningful for Correlated
    std::optional<Matrix> row_covariance;   // S = Y^T Y + Delta, stored for Correlated

    int rows() const { return static_cast<int>(entries.rows()); }
    int cols() const { return static_cast<int>(entries.cols()); }
};

struct SensingProblem {
    SensingMatrix matrix;
    Vector y;
    std::optional<SparseSignal> truth;
    double noise_variance = 0.0;
    std::uint64_t seed = 0;
};

/// Spike-and-slab prior: (1-rho) * delta(w) + rho * N(w; 0, lambda).
struct PriorParams {
    double rho = 0.5;
    double lambda = 1.0;
};

/// Gaussian marginal with one site's approximate prior removed.
struct CavityMarginal {
    double mean = 0.0;      // w-bar prime
    double variance = 0.0;  // Sigma prime
};

/// Log-partition value and the first two moments of the one-dimensional
/// tilted marginal (cavity Gaussian times the exact prior).
struct TiltedMoments {
    double log_z = 0.0;
    double m1 = 0.0;
    double m2 = 0.0;
};

struct EPConfig {
    double beta = 1e9;
    int max_sweeps = 2000;
    double tol = 1e-6;
    double damping = 0.0;       // new <- (1-damping)*new + damping*old
    double d_min = 1e-11;
    double d_max = 1e11;
    bool learn_rho = false;
    double eta = 5e-4;          // gradient-descent rate for the density
    bool rho_newton = false;    // exact 1-D Newton instead of a single gradient step
    double rho_min = 1e-6;
    double init_a = 0.0;
    std::optional<double> init_d;   // site variance at sweep 0; defaults to the slab variance
};

struct EPState {
    Vector a;           // site means
    Vector d;           // site variances
    Matrix sigma;
    Vector wbar;
    int sweep = 0;
    double eps = std::numeric_limits<double>::infinity();
};

struct EPResult {
    Vector mean;        // tilted means <w_n> at the last sweep
    Vector variance;    // tilted variances, clamped at 0
    bool converged = false;
    int sweeps_used = 0;
    double final_eps = std::numeric_limits<double>::infinity();
    std::optional<double> rho_learned;
    long negative_cavity_skips = 0;
    Vector site_a;  // final site factor means, kept for diagnostics / free energy
    Vector site_d;  // final site factor variances
};

/// Per-sweep snapshot handed to an optional observer, before the staged site
/// updates are committed: (a, d) are the values that built this sweep's
/// posterior (wbar, sigma_diag); (tilted_m1, tilted_m2) are the tilted moments
/// computed against it. For the zero-temperature solver all vectors are
/// reported in original variable order.
struct SweepView {
    int sweep;
    const Vector& a;
    const Vector& d;
    const Vector& wbar;
    const Vector& sigma_diag;
    const Vector& tilted_m1;
    const Vector& tilted_m2;
    double eps;
};

using SweepObserver = std::function<void(const SweepView&)>;

struct ReconReport {
    double pearson_r = 0.0;
    double mse = 0.0;
    double mse_head = 0.0;
    double mse_tail = 0.0;
    bool head_defined = true;   // false when the support is empty
    bool tail_defined = true;   // false when the support is full
    bool converged = false;
    int sweeps = 0;
};

struct PhasePoint {
    double rho = 0.0;
    double alpha = 0.0;
    int n = 0;
    int trial = 0;
    std::uint64_t seed = 0;
    bool converged = false;
    int sweeps = 0;
    double r = 0.0;
    double mse = 0.0;
    double mse_head = 0.0;
    double mse_tail = 0.0;
    double wall_ms = 0.0;
};

} // namespace epsense
