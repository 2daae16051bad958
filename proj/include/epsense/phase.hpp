#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <vector>

#include "ep_finite.hpp"
#include "ep_zero.hpp"
#include "errors.hpp"
#include "metrics.hpp"
#include "parallel.hpp"
#include "problem_gen.hpp"
#include "rng.hpp"
#include "types.hpp"

namespace epsense {

/// Upper Gaussian tail H(x) = P(Z > x) for standard normal Z.
inline double gauss_tail(double x) {
    return 0.5 * std::erfc(x / std::sqrt(2.0));
}

/// L0 (information-theoretic) recovery line: alpha_0(rho0) = rho0.
inline double l0_line(double rho0) {
    if (!(rho0 > 0.0 && rho0 <= 1.0))
        throw ParameterError("rho0 must lie in (0, 1]");
    return rho0;
}

struct L1Solution {
    double alpha = 0.0;
    double chi_hat = 0.0;
    double r1 = 0.0;    // residual of the alpha equation (0 by construction)
    double r2 = 0.0;    // residual of the chi equation at the returned point
};

namespace detail {

// alpha as an explicit function of chi: alpha(chi) = 2(1-rho0) H(1/sqrt(chi)) + rho0.
inline double l1_alpha_of_chi(double rho0, double chi) {
    return 2.0 * (1.0 - rho0) * gauss_tail(1.0 / std::sqrt(chi)) + rho0;
}

// Right-hand side of the chi equation divided by alpha(chi); a fixed point
// chi = l1_chi_rhs(chi) together with alpha(chi) solves the coupled system.
inline double l1_chi_rhs(double rho0, double chi) {
    const double root = std::sqrt(chi);
    const double h = gauss_tail(1.0 / root);
    const double gauss = root * std::exp(-1.0 / (2.0 * chi)) / std::sqrt(2.0 * M_PI);
    const double num = 2.0 * (1.0 - rho0) * ((chi + 1.0) * h - gauss)
                       + rho0 * (chi + 1.0);
    return num / l1_alpha_of_chi(rho0, chi);
}

} // namespace detail

/// L1 (convex relaxation) phase boundary: solves the coupled pair
///   alpha   = 2(1-rho0) H(chi^-1/2) + rho0
///   alpha chi = 2(1-rho0) [ (chi+1) H(chi^-1/2) - chi^1/2 e^{-1/(2 chi)}/sqrt(2 pi) ]
///             + rho0 (chi+1)
/// by a damped fixed-point iteration with a secant polish, falling back to a
/// bracketed bisection scan if the iteration stalls. rho0 = 1 degenerates to
/// alpha = 1 exactly. The hint, when given, only seeds the iteration.
inline L1Solution l1_line_full(double rho0, double chi_hint = 0.0) {
    if (!(rho0 > 0.0 && rho0 <= 1.0))
        throw ParameterError("rho0 must lie in (0, 1]");
    if (rho0 == 1.0) return L1Solution{1.0, 0.0, 0.0, 0.0};

    constexpr long kMaxIters = 100000;
    long spent = 0;
    double chi = (chi_hint > 0.0) ? chi_hint : 1.0;
    bool settled = false;

    for (; spent < kMaxIters; ++spent) {
        const double next = 0.5 * chi + 0.5 * detail::l1_chi_rhs(rho0, chi);
        if (!std::isfinite(next) || next <= 0.0) break;
        const double delta = std::abs(next - chi);
        chi = next;
        if (delta <= 1e-14 * std::max(1.0, chi)) { settled = true; break; }
    }

    auto res = [&](double c) { return c - detail::l1_chi_rhs(rho0, c); };

    if (settled) {
        // Secant polish towards machine-precision residual.
        double c0 = chi, f0 = res(c0);
        double c1 = chi * (1.0 + 1e-8) + 1e-12, f1 = res(c1);
        for (int it = 0; it < 60; ++it) {
            if (f1 == f0) break;
            const double c2 = c1 - f1 * (c1 - c0) / (f1 - f0);
            if (!std::isfinite(c2) || c2 <= 0.0) break;
            c0 = c1; f0 = f1;
            c1 = c2; f1 = res(c2);
            if (std::abs(f1) < 1e-13) break;
        }
        if (std::abs(f1) < std::abs(res(chi))) chi = c1;
    }

    // The damped iteration crawls when the fixed point sits at huge chi
    // (rho0 near 1), so the fallback keeps its own bounded budget: a 400-step
    // log-grid scan plus bisection. The residual gate below remains the
    // arbiter of success either way.
    if (!settled || std::abs(res(chi)) > 1e-11) {
        double lo = 0.0, hi = 0.0;
        double prev_c = 1e-8, prev_f = res(prev_c);
        for (int k = 1; k <= 400; ++k) {
            const double c = 1e-8 * std::pow(10.0, 20.0 * k / 400.0);
            const double fc = res(c);
            if (std::isfinite(fc) && std::isfinite(prev_f) && fc * prev_f <= 0.0) {
                lo = prev_c; hi = c;
                break;
            }
            prev_c = c; prev_f = fc;
        }
        if (hi == 0.0)
            throw NumericalError("l1_line: no fixed point bracketed in chi");
        double flo = res(lo);
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double fm = res(mid);
            if (fm == 0.0) { lo = hi = mid; break; }
            if (fm * flo <= 0.0) hi = mid; else { lo = mid; flo = fm; }
            if (hi - lo < 1e-15 * std::max(1.0, hi)) break;
        }
        chi = 0.5 * (lo + hi);
    }

    L1Solution out;
    out.chi_hat = chi;
    out.alpha = detail::l1_alpha_of_chi(rho0, chi);
    out.r1 = 0.0;
    out.r2 = res(chi) * out.alpha;  // residual of the chi equation as written
    if (!std::isfinite(out.alpha) || std::abs(out.r2) > 1e-10)
        throw NumericalError("l1_line: residual check failed at the returned point");
    return out;
}

inline double l1_line(double rho0, double chi_hint = 0.0) {
    return l1_line_full(rho0, chi_hint).alpha;
}

enum class SolverMode { FiniteT, ZeroT };

struct BisectionSpec {
    int n = 200;
    double rho0 = 0.5;
    std::optional<double> alpha0;   // defaults to the L0 line
    std::optional<double> alpha1;   // defaults to the L1 line
    double delta = 1e-5;            // MSE-agreement threshold
    double dalpha_min = 0.005;      // bracket half-width stop
    int probes = 1;                 // probe averaging per endpoint
    int max_retries = 5;            // fresh-seed retries on probe failure
    std::uint64_t seed = 0;
};

/// Empirical transition locator: starting from a bracket [alpha0, alpha1]
/// that straddles the reconstruction transition, probe the midpoint with
/// fresh instances and move whichever endpoint the midpoint agrees with
/// (MSE within delta of the success endpoint alpha1), halving until the
/// bracket is narrower than 2 dalpha_min. Probe is any callable
/// double(alpha, seed); failures are retried with fresh derived seeds.
template <typename Probe>
double bisect_transition(const BisectionSpec& spec, Probe&& probe) {
    if (spec.probes < 1) throw ParameterError("probe count must be at least 1");
    if (!(spec.delta > 0.0)) throw ParameterError("delta must be positive");
    if (!(spec.dalpha_min > 0.0)) throw ParameterError("dalpha_min must be positive");
    double alpha0 = spec.alpha0 ? *spec.alpha0 : l0_line(spec.rho0);
    double alpha1 = spec.alpha1 ? *spec.alpha1 : l1_line(spec.rho0);
    if (!(alpha0 < alpha1))
        throw ParameterError("bisection bracket requires alpha0 < alpha1");

    auto probe_avg = [&](double alpha, std::uint64_t iter, std::uint64_t role) {
        double acc = 0.0;
        for (int t = 0; t < spec.probes; ++t) {
            const std::uint64_t base =
                derive_seed(spec.seed, iter * 2 + role, static_cast<std::uint64_t>(t));
            std::string last_error;
            bool done = false;
            for (int k = 0; k <= spec.max_retries && !done; ++k) {
                try {
                    acc += probe(alpha, derive_seed(base, static_cast<std::uint64_t>(k)));
                    done = true;
                } catch (const std::exception& e) {
                    last_error = e.what();
                }
            }
            if (!done) {
                std::ostringstream msg;
                msg << "probe at alpha=" << alpha << " failed "
                    << (spec.max_retries + 1) << " times; last error: " << last_error;
                throw NumericalError(msg.str());
            }
        }
        return acc / static_cast<double>(spec.probes);
    };

    std::uint64_t iter = 0;
    while ((alpha1 - alpha0) / 2.0 >= spec.dalpha_min) {
        const double alpha_star = 0.5 * (alpha0 + alpha1);
        const double mse_top = probe_avg(alpha1, iter, 0);
        const double mse_mid = probe_avg(alpha_star, iter, 1);
        if (std::abs(mse_top - mse_mid) < spec.delta)
            alpha1 = alpha_star;
        else
            alpha0 = alpha_star;
        ++iter;
    }
    return 0.5 * (alpha0 + alpha1);
}

/// Probe for bisect_transition backed by the EP solvers on fresh iid
/// instances: returns the reconstruction MSE at the given undersampling
/// ratio. Non-convergence is a valid probe outcome, not a failure.
inline auto make_ep_probe(int n, double rho0, const PriorParams& prior,
                          const EPConfig& cfg, SolverMode mode) {
    return [n, rho0, prior, cfg, mode](double alpha, std::uint64_t seed) {
        const int m = std::max<int>(1, static_cast<int>(std::llround(alpha * n)));
        const SensingProblem problem = make_problem(n, m, rho0, prior.lambda, seed);
        const EPResult res = (mode == SolverMode::ZeroT)
            ? run_ep_zero_t(problem, prior, cfg)
            : run_ep(problem, prior, cfg);
        return mse(problem.truth->values, res.mean);
    };
}

struct PhaseGridSpec {
    int n = 200;
    std::vector<double> rho_grid;
    std::vector<double> alpha_grid;
    int trials = 1;
    std::uint64_t seed = 0;
    SolverMode solver = SolverMode::FiniteT;
    int correlated_k = 0;       // 0: iid measurement rows
    bool record_wall = true;    // false: wall_ms reported as 0
};

/// Dense (rho, alpha) reconstruction map: trials x cells independent runs,
/// each on a fresh instance seeded by (root seed, cell index, trial index).
/// The reconstruction prior is matched to each cell: rho from the cell,
/// slab variance from `lambda`. A failed trial (solver exception) scores as
/// the all-zero estimate with converged = false; it never aborts the sweep.
/// Output is ordered by (rho, alpha, trial) regardless of the job count.
inline std::vector<PhasePoint> phase_sweep(const PhaseGridSpec& spec, double lambda,
                                           const EPConfig& cfg, int jobs = 1) {
    if (spec.n < 2) throw ParameterError("phase sweep needs n >= 2");
    if (spec.rho_grid.empty() || spec.alpha_grid.empty())
        throw ParameterError("phase sweep needs nonempty rho and alpha grids");
    if (spec.trials < 1) throw ParameterError("trials must be at least 1");
    for (double r : spec.rho_grid)
        if (!(r > 0.0 && r <= 1.0)) throw ParameterError("rho grid values must lie in (0, 1]");
    for (double a : spec.alpha_grid)
        if (!(a > 0.0)) throw ParameterError("alpha grid values must be positive");

    const long n_alpha = static_cast<long>(spec.alpha_grid.size());
    const long n_trials = spec.trials;
    const long n_tasks = static_cast<long>(spec.rho_grid.size()) * n_alpha * n_trials;
    std::vector<PhasePoint> points(static_cast<std::size_t>(n_tasks));

    parallel_for(jobs, n_tasks, [&](long task) {
        const long cell = task / n_trials;
        const int trial = static_cast<int>(task % n_trials);
        const double rho = spec.rho_grid[static_cast<std::size_t>(cell / n_alpha)];
        const double alpha = spec.alpha_grid[static_cast<std::size_t>(cell % n_alpha)];
        const std::uint64_t seed = derive_seed(spec.seed, static_cast<std::uint64_t>(cell),
                                               static_cast<std::uint64_t>(trial));
        PhasePoint& pt = points[static_cast<std::size_t>(task)];
        pt.rho = rho;
        pt.alpha = alpha;
        pt.n = spec.n;
        pt.trial = trial;
        pt.seed = seed;

        const auto t0 = std::chrono::steady_clock::now();
        ReconReport rep;
        const PriorParams prior{rho, lambda};
        const std::optional<int> corr_k = (spec.correlated_k > 0)
            ? std::optional<int>(spec.correlated_k) : std::nullopt;
        try {
            const int m = std::max<int>(1, static_cast<int>(std::llround(alpha * spec.n)));
            const SensingProblem problem =
                make_problem(spec.n, m, rho, lambda, seed, corr_k);
            const EPResult res = (spec.solver == SolverMode::ZeroT)
                ? run_ep_zero_t(problem, prior, cfg)
                : run_ep(problem, prior, cfg);
            rep = make_report(*problem.truth, res.mean, res.converged, res.sweeps_used);
        } catch (const std::exception&) {
            try {
                // Score the trial as a total miss against its own truth (the
                // signal stream depends only on the seed, not on M).
                const SparseSignal truth =
                    gen_sparse_signal(spec.n, rho, lambda, derive_seed(seed, kStreamSignal));
                rep = make_report(truth, Vector::Zero(spec.n), false, 0);
            } catch (const std::exception&) {
                rep = ReconReport{};
            }
        }
        const auto t1 = std::chrono::steady_clock::now();
        pt.converged = rep.converged;
        pt.sweeps = rep.sweeps;
        pt.r = rep.pearson_r;
        pt.mse = rep.mse;
        pt.mse_head = rep.mse_head;
        pt.mse_tail = rep.mse_tail;
        pt.wall_ms = spec.record_wall
            ? std::chrono::duration<double, std::milli>(t1 - t0).count()
            : 0.0;
    });
    return points;
}

} // namespace epsense
