// Acceptance harness: one self-contained check per shipped claim, each
// printing a single PASS/FAIL line. Run all with no arguments or a single
// one with --criterion k. Exit status is nonzero when any selected check
// fails. The checks lean on the same independent oracles as the unit suite
// (quadrature, punctured inversion, brute-force enumeration, grid search).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>
#include <sys/wait.h>

#include <epsense/epsense.hpp>

#include "oracles.hpp"

using namespace epsense;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

class Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

template <typename... Args>
std::string str(Args&&... args) {
    std::ostringstream os;
    os.precision(3);
    (os << ... << args);
    return os.str();
}

// ---------------------------------------------------------------- helpers

struct TempDir {
    fs::path path;
    TempDir() {
        auto tmpl = (fs::temp_directory_path() / "epsense_acc_XXXXXX").string();
        if (mkdtemp(tmpl.data()) == nullptr)
            throw IoError("mkdtemp failed");
        path = tmpl;
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

int run_cli(const std::string& tail) {
    const std::string cmd = std::string("\"") + EPSENSE_CLI_PATH + "\" " + tail
                            + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    if (status == -1 || !WIFEXITED(status)) return -1;
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot read " + p.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

double rel_err(double got, double want, double floor_scale) {
    return std::abs(got - want) / std::max(std::abs(want), floor_scale);
}

// ------------------------------------------------------------ criterion 1

// Closed-form tilted moments against adaptive quadrature with exact
// point-mass handling, over a 1000-case random grid, within 10 s.
Outcome criterion1() {
    Timer timer;
    std::mt19937_64 eng(20260101);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    double worst = 0.0;
    int n_fail = 0;
    for (int c = 0; c < 1000; ++c) {
        const double rho = 0.02 + 0.96 * u01(eng);
        const double lambda = std::exp(std::log(0.3) + u01(eng) * std::log(4.0 / 0.3));
        const double sp = std::exp(std::log(1e-4) + u01(eng) * std::log(1e2 / 1e-4));
        const double wb = gauss(eng) * std::sqrt(lambda + sp);

        const TiltedMoments t = tilted_moments(CavityMarginal{wb, sp}, PriorParams{rho, lambda});
        const auto o = oracles::tilted_by_quadrature(wb, sp, rho, lambda);

        const double e1 = rel_err(t.m1, o.m1, 1e-12);
        const double e2 = rel_err(t.m2, o.m2, 1e-12);
        const double ez = std::abs(t.log_z - std::log(o.z)) / std::max(1.0, std::abs(std::log(o.z)));
        const double e = std::max({e1, e2, ez});
        worst = std::max(worst, e);
        if (e > 1e-8) ++n_fail;
    }
    const double secs = timer.seconds();
    Outcome out;
    out.pass = n_fail == 0 && secs < 10.0;
    out.detail = str("1000 cases, worst rel err ", worst, ", ", n_fail, " over tolerance, ",
                     secs, " s");
    return out;
}

// ------------------------------------------------------------ criterion 2

// Rank-one cavity extraction equals direct punctured-precision inversion on
// 100 random instances with N <= 20, within 5 s.
Outcome criterion2() {
    Timer timer;
    std::mt19937_64 eng(20260102);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    double worst = 0.0;
    int n_fail = 0, n_sites = 0, n_improper = 0;
    for (int inst = 0; inst < 100; ++inst) {
        const int n = 2 + static_cast<int>(u01(eng) * 19.0) % 19;
        const int m = 1 + static_cast<int>(u01(eng) * n) % n;
        const double beta = std::exp(std::log(0.1) + u01(eng) * std::log(100.0));
        Matrix f(m, n);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) f(i, j) = gauss(eng) / std::sqrt(double(n));
        Vector y(m), a(n), d(n);
        for (int i = 0; i < m; ++i) y[i] = gauss(eng);
        for (int j = 0; j < n; ++j) {
            a[j] = 2.0 * gauss(eng);
            d[j] = std::exp(std::log(1e-2) + u01(eng) * std::log(1e4));
        }
        const PosteriorParams post = posterior_params(f, y, a, d, beta);
        for (int j = 0; j < n; ++j) {
            const auto cav = cavity_params(post.sigma(j, j), post.wbar[j], a[j], d[j]);
            if (!cav) { ++n_fail; continue; }    // cannot happen with d > 0
            // A site whose factor carries nearly all the marginal precision
            // has a near-improper cavity: the downdate divides by this
            // cancellation, so no double-precision evaluation of either side
            // resolves the true value to 1e-9. Compare only proper cavities.
            const double den = 1.0 - post.sigma(j, j) / d[j];
            if (den < 1e-5) { ++n_improper; continue; }
            const CavityMarginal ref = oracles::cavity_by_puncture(f, y, a, d, beta, j);
            const double e = std::max(rel_err(cav->mean, ref.mean, 1.0),
                                      rel_err(cav->variance, ref.variance, 1.0));
            worst = std::max(worst, e);
            if (e > 1e-9) ++n_fail;
            ++n_sites;
        }
    }
    const double secs = timer.seconds();
    Outcome out;
    out.pass = n_fail == 0 && secs < 5.0;
    out.detail = str(n_sites, " sites over 100 instances, worst err ", worst, ", ",
                     n_improper, " near-improper cavities excluded, ", secs, " s");
    return out;
}

// ------------------------------------------------------------ criterion 3

// Success region at N = 200: (rho 0.1, alpha 0.3) and (rho 0.3, alpha 0.6)
// reconstruct on >= 90% of 50 seeds; (rho 0.5, alpha 0.45), below the
// counting bound, never reaches MSE < 1e-3.
Outcome criterion3() {
    // A solver exception (the posterior precision can become numerically
    // singular deep in the failure regime) reconstructs nothing: it counts
    // against the success points and trivially upholds the never-reconstructs
    // point, mirroring the phase harness's per-trial convention.
    auto run_point = [](double rho, int m, std::uint64_t base, int& successes,
                        double& min_mse, int& thrown) {
        for (int s = 0; s < 50; ++s) {
            const SensingProblem pb = make_problem(200, m, rho, 1.0, base + s);
            EPResult res;
            try {
                res = run_ep(pb, PriorParams{rho, 1.0}, EPConfig{});
            } catch (const NumericalError&) {
                ++thrown;
                continue;
            }
            const double e = mse(pb.truth->values, res.mean);
            min_mse = std::min(min_mse, e);
            double r = 0.0;
            try { r = pearson_r(pb.truth->values, res.mean); } catch (const ParameterError&) {}
            if (r > 0.999 && e < 1e-6) ++successes;
        }
    };
    int succ_a = 0, succ_b = 0, succ_c = 0;
    double min_a = 1.0, min_b = 1.0, min_c = 1.0;
    int thrown = 0;
    run_point(0.1, 60, 3000, succ_a, min_a, thrown);
    run_point(0.3, 120, 3100, succ_b, min_b, thrown);
    run_point(0.5, 90, 3200, succ_c, min_c, thrown);

    Outcome out;
    out.pass = succ_a >= 45 && succ_b >= 45 && min_c >= 1e-3;
    out.detail = str("(0.1,0.3): ", succ_a, "/50, (0.3,0.6): ", succ_b, "/50, ",
                     "(0.5,0.45): min MSE ", min_c, ", ", thrown,
                     " trials aborted by the solver");
    return out;
}

// ------------------------------------------------------------ criterion 4

// Finite- and zero-temperature solvers are interchangeable: on 50 converged
// noiseless instances the per-coordinate means agree to 1e-4 and the MSE
// values to 1e-6.
Outcome criterion4() {
    const int ns[] = {40, 60, 80, 100};
    const double rhos[] = {0.1, 0.2, 0.25};
    int collected = 0, attempts = 0;
    double worst_coord = 0.0, worst_mse = 0.0;
    while (collected < 50 && attempts < 120) {
        const int n = ns[attempts % 4];
        const double rho = rhos[attempts % 3];
        const int m = static_cast<int>(std::lround(0.7 * n));
        const SensingProblem pb = make_problem(n, m, rho, 1.0, 4000 + attempts);
        ++attempts;
        const PriorParams prior{rho, 1.0};
        const EPResult fin = run_ep(pb, prior, EPConfig{});
        const EPResult zer = run_ep_zero_t(pb, prior, EPConfig{});
        if (!fin.converged || !zer.converged) continue;
        ++collected;
        worst_coord = std::max(worst_coord, (fin.mean - zer.mean).cwiseAbs().maxCoeff());
        worst_mse = std::max(worst_mse, std::abs(mse(pb.truth->values, fin.mean)
                                                 - mse(pb.truth->values, zer.mean)));
    }
    Outcome out;
    out.pass = collected == 50 && worst_coord <= 1e-4 && worst_mse <= 1e-6;
    out.detail = str(collected, "/50 converged pairs in ", attempts, " attempts, max |dw| ",
                     worst_coord, ", max |dMSE| ", worst_mse);
    return out;
}

// ------------------------------------------------------------ criterion 5

// Empirical EP transition at N = 200 sits strictly between the counting
// bound and the convex-relaxation line for rho in {0.2, 0.4, 0.6}.
Outcome criterion5() {
    std::ostringstream detail;
    detail.precision(4);
    bool ok = true;
    int idx = 0;
    for (double rho : {0.2, 0.4, 0.6}) {
        BisectionSpec spec;
        spec.n = 200;
        spec.rho0 = rho;
        spec.delta = 1e-5;
        spec.dalpha_min = 0.01;
        spec.seed = 5000 + idx++;
        auto probe = make_ep_probe(spec.n, rho, PriorParams{rho, 1.0}, EPConfig{},
                                   SolverMode::FiniteT);
        const double a_ep = bisect_transition(spec, probe);
        const double a_l0 = l0_line(rho), a_l1 = l1_line(rho);
        if (!(a_l0 < a_ep && a_ep < a_l1)) ok = false;
        detail << (idx > 1 ? "; " : "") << "rho " << rho << ": " << a_l0 << " < "
               << a_ep << " < " << a_l1;
    }
    return Outcome{ok, detail.str()};
}

// ------------------------------------------------------------ criterion 6

// L1 line solver: exact degenerate endpoint, defining-equation residuals
// below 1e-10 with fresh arithmetic, and agreement with an independent 2-D
// grid-refinement oracle to 1e-6.
Outcome criterion6() {
    bool ok = l1_line(1.0) == 1.0;
    double worst_res = 0.0;
    for (int i = 1; i <= 19; ++i) {
        const double rho = 0.05 * i;
        const L1Solution sol = l1_line_full(rho);
        const double chi = sol.chi_hat, alpha = sol.alpha;
        const double h = 0.5 * std::erfc(1.0 / std::sqrt(2.0 * chi));
        const double g = std::sqrt(chi) * std::exp(-1.0 / (2.0 * chi)) / std::sqrt(2.0 * M_PI);
        const double r1 = alpha - (2.0 * (1.0 - rho) * h + rho);
        const double r2 = alpha * chi
                          - (2.0 * (1.0 - rho) * ((chi + 1.0) * h - g) + rho * (chi + 1.0));
        worst_res = std::max({worst_res, std::abs(r1), std::abs(r2)});
    }
    if (worst_res >= 1e-10) ok = false;

    double worst_grid = 0.0;
    for (double rho : {0.1, 0.5, 0.9})
        worst_grid = std::max(worst_grid, std::abs(l1_line(rho) - oracles::l1_by_grid(rho)));
    if (worst_grid > 1e-6) ok = false;

    return Outcome{ok, str("alpha1(1) = ", l1_line(1.0), ", worst residual ", worst_res,
                           ", worst oracle gap ", worst_grid)};
}

// ------------------------------------------------------------ criterion 7

// Free-energy stationarity: polish converged states to the unconstrained
// fixed point, then check finite-difference partials in every site
// parameter vanish, the rho derivative matches finite differences, and the
// rho curvature is nonnegative.

struct PolishedState {
    Matrix f;
    Vector y;
    Vector a, d;
    double beta = 0.0;
};

std::optional<PolishedState> polish_state(const SensingProblem& pb, const PriorParams& prior,
                                          double beta) {
    EPConfig cfg;
    cfg.beta = beta;
    cfg.tol = 1e-10;
    cfg.max_sweeps = 4000;
    const EPResult res = run_ep(pb, prior, cfg);
    if (!res.converged) return std::nullopt;

    // Damped fixed-point iteration in natural parameters (site precision
    // r = 1/d and natural mean eta = a/d), with no clamps. The fixed points
    // coincide with the raw moment-matching update's, but a raw site
    // precision crossing zero is a smooth transit here, where damping the
    // variance d would walk through a pole and wreck the posterior.
    const Matrix& f = pb.matrix.entries;
    const Vector& y = pb.y;
    const double damp = 0.8;
    const auto n = res.site_a.size();
    Vector a = res.site_a, d = res.site_d, r(n), eta(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        r[i] = 1.0 / d[i];
        eta[i] = a[i] / d[i];
    }
    for (int it = 0; it < 20000; ++it) {
        for (Eigen::Index i = 0; i < n; ++i) {
            if (std::abs(r[i]) < 1e-14) return std::nullopt;    // flat site
            d[i] = 1.0 / r[i];
            a[i] = eta[i] / r[i];
        }
        PosteriorParams post;
        try {
            post = posterior_params(f, y, a, d, beta);
        } catch (const NumericalError&) {
            return std::nullopt;
        }
        double delta = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto cav = cavity_params(post.sigma(i, i), post.wbar[i], a[i], d[i]);
            if (!cav) return std::nullopt;
            const TiltedMoments t = tilted_moments(*cav, prior);
            const double vt = t.m2 - t.m1 * t.m1;
            if (!(vt > 0.0)) return std::nullopt;
            const double sp = cav->variance;
            const double r_raw = 1.0 / vt - 1.0 / sp;
            const double eta_raw = t.m1 / vt - cav->mean / sp;
            const double r_new = (1.0 - damp) * r_raw + damp * r[i];
            const double eta_new = (1.0 - damp) * eta_raw + damp * eta[i];
            delta = std::max(delta, std::abs(r_new - r[i]) / std::max(1.0, std::abs(r[i])));
            delta = std::max(delta,
                             std::abs(eta_new - eta[i]) / std::max(1.0, std::abs(eta[i])));
            r[i] = r_new;
            eta[i] = eta_new;
        }
        if (delta < 1e-12) {
            for (Eigen::Index i = 0; i < n; ++i) {
                d[i] = 1.0 / r[i];
                a[i] = eta[i] / r[i];
            }
            return PolishedState{f, y, a, d, beta};
        }
    }
    return std::nullopt;
}

Outcome criterion7() {
    const PriorParams prior{0.4, 1.0};
    std::vector<PolishedState> states;
    int candidates = 0;
    for (std::uint64_t seed = 200; seed < 225 && states.size() < 20; ++seed) {
        for (double beta : {1.0, 2.0}) {
            if (states.size() >= 20) break;
            ++candidates;
            const SensingProblem pb = make_problem(30, 21, 0.4, 1.0, seed);
            if (auto st = polish_state(pb, prior, beta)) states.push_back(std::move(*st));
        }
    }
    if (states.size() < 20)
        return Outcome{false, str("only ", states.size(), " of 20 states polished from ",
                                  candidates, " candidates")};

    double worst_site = 0.0, worst_rho = 0.0, min_curv = std::numeric_limits<double>::max();
    for (const PolishedState& ps : states) {
        EPState st;
        st.a = ps.a;
        st.d = ps.d;
        const PosteriorParams post = posterior_params(ps.f, ps.y, ps.a, ps.d, ps.beta);
        st.sigma = post.sigma;
        st.wbar = post.wbar;

        auto f_of = [&](const Vector& a, const Vector& d) {
            EPState s = st;
            s.a = a;
            s.d = d;
            return ep_free_energy(s, prior, ps.beta, ps.f, ps.y).f_ep;
        };
        for (Eigen::Index i = 0; i < ps.a.size(); ++i) {
            const double ha = 1e-5 * std::max(1.0, std::abs(ps.a[i]));
            Vector ap = ps.a, am = ps.a;
            ap[i] += ha;
            am[i] -= ha;
            worst_site = std::max(worst_site,
                                  std::abs(f_of(ap, ps.d) - f_of(am, ps.d)) / (2.0 * ha));
            const double hd = 1e-5 * std::max(1.0, std::abs(ps.d[i]));
            Vector dp = ps.d, dm = ps.d;
            dp[i] += hd;
            dm[i] -= hd;
            worst_site = std::max(worst_site,
                                  std::abs(f_of(ps.a, dp) - f_of(ps.a, dm)) / (2.0 * hd));
        }

        auto f_of_rho = [&](double rho) {
            return ep_free_energy(st, PriorParams{rho, prior.lambda}, ps.beta, ps.f, ps.y).f_ep;
        };
        const double grad = dfep_drho(st, prior);
        const double h = 1e-5;
        const double fd = oracles::fd_five_point(f_of_rho, prior.rho, h);
        worst_rho = std::max(worst_rho, rel_err(grad, fd, 1.0));
        const double h2 = 1e-3;
        const double curv = (-f_of_rho(prior.rho + 2 * h2) + 16 * f_of_rho(prior.rho + h2)
                             - 30 * f_of_rho(prior.rho) + 16 * f_of_rho(prior.rho - h2)
                             - f_of_rho(prior.rho - 2 * h2)) / (12.0 * h2 * h2);
        min_curv = std::min(min_curv, curv);
    }

    Outcome out;
    out.pass = worst_site < 1e-4 && worst_rho <= 1e-6 && min_curv >= -1e-6;
    out.detail = str("20 states (", candidates, " candidates), max |dF/d(site)| ", worst_site,
                     ", rho-grad rel err ", worst_rho, ", min d2F/drho2 ", min_curv);
    return out;
}

// ------------------------------------------------------------ criterion 8

// Density learning at N = 200, alpha = 0.7, true rho = 0.3: learned rho
// within 0.05 of truth on at least 80% of 25 seeds.
Outcome criterion8() {
    int hits = 0;
    double worst = 0.0;
    for (int s = 0; s < 25; ++s) {
        const SensingProblem pb = make_problem(200, 140, 0.3, 1.0, 8000 + s);
        EPConfig cfg;
        cfg.learn_rho = true;
        const EPResult res = run_ep(pb, PriorParams{0.5, 1.0}, cfg);
        const double learned = res.rho_learned.value_or(0.5);
        worst = std::max(worst, std::abs(learned - 0.3));
        if (std::abs(learned - 0.3) <= 0.05) ++hits;
    }
    return Outcome{hits >= 20, str(hits, "/25 within 0.05 of the true density, worst |err| ",
                                   worst)};
}

// ------------------------------------------------------------ criterion 9

// Correlated-row robustness at N = 50: EP success statistics with
// correlation rank k in {1, 5} stay within the 3-sigma binomial band of the
// iid statistics, and reach MSE < 1e-8 above a threshold below alpha = 1;
// the greedy baseline's median MSE stays above 1e-2 at k = 5, rho = 0.5.
Outcome criterion9() {
    const int trials = 100;
    const int n = 50;
    auto ep_successes = [&](double rho, double alpha, std::optional<int> k,
                            std::uint64_t cell) {
        const int m = static_cast<int>(std::lround(alpha * n));
        int succ = 0;
        for (int t = 0; t < trials; ++t) {
            const SensingProblem pb =
                make_problem(n, m, rho, 1.0, derive_seed(9100 + cell, t), k);
            const EPResult res = run_ep(pb, PriorParams{rho, 1.0}, EPConfig{});
            if (mse(pb.truth->values, res.mean) < 1e-8) ++succ;
        }
        return succ;
    };

    bool ok = true;
    std::ostringstream detail;
    detail.precision(3);
    std::uint64_t cell = 0;
    const std::pair<double, std::pair<double, double>> grids[] = {
        {0.3, {0.7, 0.8}}, {0.5, {0.85, 0.95}}};
    for (const auto& [rho, alphas] : grids) {
        for (double alpha : {alphas.first, alphas.second}) {
            const int s_iid = ep_successes(rho, alpha, std::nullopt, cell++);
            for (int k : {1, 5}) {
                const int s_corr = ep_successes(rho, alpha, k, cell++);
                const double p_pool = (s_iid + s_corr) / (2.0 * trials);
                const double band =
                    3.0 * std::sqrt(std::max(p_pool * (1.0 - p_pool) * 2.0 / trials, 0.0));
                const double gap = std::abs(s_iid - s_corr) / double(trials);
                if (gap > band) ok = false;
                // Threshold evidence: at the top alpha of each rho the
                // correlated ensemble must reconstruct almost surely.
                if (alpha == alphas.second && s_corr < 90) ok = false;
                detail << "(" << rho << "," << alpha << ",k" << k << "): " << s_corr << " vs "
                       << s_iid << " iid; ";
            }
        }
    }

    // OMP stays failed at k = 5, rho = 0.5 over the same alpha range.
    double worst_median = std::numeric_limits<double>::max();
    for (double alpha : {0.85, 0.95}) {
        const int m = static_cast<int>(std::lround(alpha * n));
        std::vector<double> errs;
        for (int t = 0; t < trials; ++t) {
            const SensingProblem pb =
                make_problem(n, m, 0.5, 1.0, derive_seed(9100 + cell, t), 5);
            const Vector w = omp_reconstruct(pb, OMPConfig{});
            errs.push_back(mse(pb.truth->values, w));
        }
        std::nth_element(errs.begin(), errs.begin() + trials / 2, errs.end());
        worst_median = std::min(worst_median, errs[trials / 2]);
        ++cell;
    }
    if (!(worst_median > 1e-2)) ok = false;
    detail << "omp median MSE >= " << worst_median;
    return Outcome{ok, detail.str()};
}

// ----------------------------------------------------------- criterion 10

// The support/off-support error split recombines to the total MSE on every
// trial, and the support term dominates in at least 90% of successful-region
// trials.
Outcome criterion10() {
    double worst_identity = 0.0;
    int dominated = 0, successes = 0;
    auto run_cell = [&](double rho, double alpha, int trials, std::uint64_t base,
                        bool count_dominance) {
        const int n = 100;
        const int m = static_cast<int>(std::lround(alpha * n));
        for (int t = 0; t < trials; ++t) {
            const SensingProblem pb = make_problem(n, m, rho, 1.0, base + t);
            const EPResult res = run_ep(pb, PriorParams{rho, 1.0}, EPConfig{});
            const double total = mse(pb.truth->values, res.mean);
            const MseDecomposition dec = mse_decomposition(*pb.truth, res.mean);
            const double k = double(pb.truth->support.size());
            const double recombined =
                (k / n) * dec.head + ((n - k) / n) * dec.tail;
            worst_identity = std::max(worst_identity,
                                      std::abs(recombined - total) / std::max(1.0, total));
            if (count_dominance && total < 1e-6) {
                ++successes;
                if ((k / n) * dec.head > ((n - k) / n) * dec.tail) ++dominated;
            }
        }
    };
    run_cell(0.25, 0.65, 60, 10000, true);   // beyond the transition
    run_cell(0.5, 0.4, 15, 10500, false);    // failed region: identity only

    Outcome out;
    out.pass = worst_identity <= 1e-12 && successes >= 50
               && dominated * 10 >= successes * 9;
    out.detail = str("worst identity gap ", worst_identity, ", head dominates ", dominated,
                     "/", successes, " successful trials");
    return out;
}

// ----------------------------------------------------------- criterion 11

// Tiny instances (N = 8, M = 4, K = 1): both EP solvers land on the
// brute-force sparsest solution on all of 50 instances.
Outcome criterion11() {
    int collected = 0, matched = 0;
    std::uint64_t seed = 11000;
    double worst = 0.0;
    while (collected < 50 && seed < 11400) {
        const SensingProblem pb = make_problem(8, 4, 0.125, 1.0, seed++);
        if (!pb.truth || pb.truth->support.size() != 1) continue;
        // Keep only instances whose 1-sparse exact solution is unique, so
        // "the" brute-force answer is well defined.
        const Matrix& f = pb.matrix.entries;
        const double scale = std::max(1.0, pb.y.cwiseAbs().maxCoeff());
        int feasible = 0;
        for (int j = 0; j < 8; ++j) {
            const double c = f.col(j).dot(pb.y) / f.col(j).squaredNorm();
            if ((pb.y - c * f.col(j)).cwiseAbs().maxCoeff() <= 1e-8 * scale) ++feasible;
        }
        if (feasible != 1) continue;
        ++collected;
        const Vector brute = oracles::sparsest_solution(f, pb.y, 1);
        const PriorParams prior{0.125, 1.0};
        const EPResult fin = run_ep(pb, prior, EPConfig{});
        const EPResult zer = run_ep_zero_t(pb, prior, EPConfig{});
        const double e = std::max(mse(brute, fin.mean), mse(brute, zer.mean));
        worst = std::max(worst, e);
        if (e < 1e-6) ++matched;
    }
    return Outcome{collected == 50 && matched == 50,
                   str(matched, "/", collected, " instances matched, worst MSE vs brute force ",
                       worst)};
}

// ----------------------------------------------------------- criterion 12

// Byte-level determinism of every CLI command under fixed seeds, including
// parallel execution.
Outcome criterion12() {
    TempDir tmp;
    auto p = [&](const char* name) { return (tmp.path / name).string(); };
    auto same = [&](const char* x, const char* y) {
        return slurp(tmp.path / x) == slurp(tmp.path / y);
    };
    std::ostringstream detail;
    bool ok = true;
    auto require = [&](bool cond, const char* what) {
        if (!cond) {
            ok = false;
            detail << what << " differs; ";
        }
    };

    // gen: data artifacts match across directories; the manifest embeds the
    // resolved output path, so its byte-stability is checked on a same-path
    // rerun.
    const std::string gen = "gen --n 80 --m 40 --rho 0.25 --seed 31 --fixed-timing --out ";
    require(run_cli(gen + p("g1")) == 0, "gen exit");
    require(run_cli(gen + p("g2")) == 0, "gen exit");
    for (const char* f : {"F.mat", "y.vec", "w.vec", "meta.json"})
        require(slurp(tmp.path / "g1" / f) == slurp(tmp.path / "g2" / f), "gen output");
    const std::string gen_manifest = slurp(tmp.path / "g1" / "manifest.json");
    require(run_cli(gen + p("g1")) == 0, "gen exit");
    require(slurp(tmp.path / "g1" / "manifest.json") == gen_manifest, "gen manifest");

    // reconstruct, both modes: a same-path rerun reproduces every artifact
    // (result.json embeds the manifest, which embeds the output path).
    for (const char* mode : {"finite-t", "zero-t"}) {
        const std::string rec = std::string("reconstruct --mode ") + mode + " --bundle "
                                + p("g1") + " --fixed-timing --out ";
        require(run_cli(rec + p("r1")) == 0, "reconstruct exit");
        const std::string res_first = slurp(tmp.path / "r1" / "result.json");
        const std::string w_first = slurp(tmp.path / "r1" / "w_hat.vec");
        const std::string man_first = slurp(tmp.path / "r1" / "manifest.json");
        require(run_cli(rec + p("r1")) == 0, "reconstruct exit");
        require(slurp(tmp.path / "r1" / "result.json") == res_first, "reconstruct result");
        require(slurp(tmp.path / "r1" / "w_hat.vec") == w_first, "reconstruct w_hat");
        require(slurp(tmp.path / "r1" / "manifest.json") == man_first,
                "reconstruct manifest");
    }

    // phase: rerun and parallel runs agree byte for byte on the CSV; the
    // manifest check is a same-path rerun for the path reason above.
    const std::string phase = "phase --n 60 --rho-grid 0.2,0.4 --alpha-grid 0.5,0.8"
                              " --trials 2 --seed 9 --fixed-timing --out ";
    require(run_cli(phase + p("p1.csv") + " --jobs 1") == 0, "phase exit");
    require(run_cli(phase + p("p2.csv") + " --jobs 1") == 0, "phase exit");
    require(run_cli(phase + p("p4.csv") + " --jobs 4") == 0, "phase exit");
    require(same("p1.csv", "p2.csv"), "phase rerun");
    require(same("p1.csv", "p4.csv"), "phase --jobs 4");
    const std::string phase_manifest = slurp(tmp.path / "p1.csv.manifest.json");
    require(run_cli(phase + p("p1.csv") + " --jobs 1") == 0, "phase exit");
    require(slurp(tmp.path / "p1.csv.manifest.json") == phase_manifest, "phase manifest");

    // compare: serial vs parallel
    const std::string cmp = "compare --n 50 --rho 0.3 --alpha-grid 0.6,0.9 --trials 3"
                            " --seed 12 --fixed-timing --out ";
    require(run_cli(cmp + p("c1.csv") + " --jobs 1") == 0, "compare exit");
    require(run_cli(cmp + p("c4.csv") + " --jobs 4") == 0, "compare exit");
    require(same("c1.csv", "c4.csv"), "compare --jobs 4");

    // bisect: rerun
    const std::string bis = "bisect --n 40 --rho 0.3 --dalpha-min 0.04 --seed 4"
                            " --fixed-timing --out ";
    require(run_cli(bis + p("b1.csv")) == 0, "bisect exit");
    require(run_cli(bis + p("b2.csv")) == 0, "bisect exit");
    require(same("b1.csv", "b2.csv"), "bisect rerun");

    if (ok) detail << "gen/reconstruct/phase/compare/bisect byte-identical, "
                      "including --jobs 4 runs";
    return Outcome{ok, detail.str()};
}

using CriterionFn = Outcome (*)();

const CriterionFn kCriteria[12] = {
    criterion1, criterion2, criterion3, criterion4,  criterion5,  criterion6,
    criterion7, criterion8, criterion9, criterion10, criterion11, criterion12,
};

} // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--criterion" && i + 1 < argc) {
            only = std::atoi(argv[++i]);
        } else {
            std::fprintf(stderr, "usage: %s [--criterion k]\n", argv[0]);
            return 2;
        }
    }
    if (only < 0 || only > 12) {
        std::fprintf(stderr, "criterion index must lie in 1..12\n");
        return 2;
    }

    int failures = 0;
    for (int k = 1; k <= 12; ++k) {
        if (only != 0 && k != only) continue;
        Outcome out;
        try {
            out = kCriteria[k - 1]();
        } catch (const std::exception& e) {
            out = Outcome{false, str("exception: ", e.what())};
        }
        std::printf("criterion %d: %s — %s\n", k, out.pass ? "PASS" : "FAIL",
                    out.detail.c_str());
        std::fflush(stdout);
        if (!out.pass) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
