#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "errors.hpp"
#include "types.hpp"

namespace epsense {

/// Sample Pearson correlation. Either input being constant leaves the
/// correlation undefined and raises a parameter error; roundoff excess
/// beyond |r| = 1 is clamped.
inline double pearson_r(const Vector& w, const Vector& w_hat) {
    if (w.size() != w_hat.size())
        throw ParameterError("pearson_r: vectors must share one length");
    if (w.size() < 2) throw ParameterError("pearson_r needs at least two entries");
    const Vector cw = w.array() - w.mean();
    const Vector ch = w_hat.array() - w_hat.mean();
    const double ssw = cw.squaredNorm();
    const double ssh = ch.squaredNorm();
    if (!(ssw > 0.0) || !(ssh > 0.0))
        throw ParameterError("pearson_r undefined for a constant vector");
    const double r = cw.dot(ch) / std::sqrt(ssw * ssh);
    return std::clamp(r, -1.0, 1.0);
}

/// Mean squared error, normalized by the vector length.
inline double mse(const Vector& w, const Vector& w_hat) {
    if (w.size() != w_hat.size())
        throw ParameterError("mse: vectors must share one length");
    if (w.size() == 0) throw ParameterError("mse of empty vectors is undefined");
    return (w - w_hat).squaredNorm() / static_cast<double>(w.size());
}

/// Support-split error: head sums over the K true-support coordinates
/// (divided by K), tail over the N-K off-support ones (divided by N-K).
/// The weighted recombination (K/N) head + ((N-K)/N) tail equals mse exactly.
/// An empty part is reported as 0 with its defined-flag cleared.
struct MseDecomposition {
    double head = 0.0;
    double tail = 0.0;
    bool head_defined = true;
    bool tail_defined = true;
};

inline MseDecomposition mse_decomposition(const SparseSignal& truth, const Vector& w_hat) {
    const auto n = truth.values.size();
    if (w_hat.size() != n)
        throw ParameterError("mse_decomposition: estimate length does not match the signal");
    if (n == 0) throw ParameterError("mse_decomposition of an empty signal is undefined");
    std::vector<bool> on_support(static_cast<std::size_t>(n), false);
    for (int idx : truth.support) {
        if (idx < 0 || idx >= n)
            throw ParameterError("mse_decomposition: support index out of range");
        on_support[static_cast<std::size_t>(idx)] = true;
    }
    const auto k = static_cast<Eigen::Index>(truth.support.size());
    double head_sum = 0.0, tail_sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double e = truth.values[i] - w_hat[i];
        (on_support[static_cast<std::size_t>(i)] ? head_sum : tail_sum) += e * e;
    }
    MseDecomposition out;
    out.head_defined = k > 0;
    out.tail_defined = k < n;
    out.head = out.head_defined ? head_sum / static_cast<double>(k) : 0.0;
    out.tail = out.tail_defined ? tail_sum / static_cast<double>(n - k) : 0.0;
    return out;
}

/// Fraction of converged results.
inline double convergence_rate(const std::vector<EPResult>& results) {
    if (results.empty())
        throw ParameterError("convergence_rate of an empty result set is undefined");
    long c = 0;
    for (const auto& r : results) c += r.converged ? 1 : 0;
    return static_cast<double>(c) / static_cast<double>(results.size());
}

/// Standard error of the mean (sample sigma / sqrt(n)); 0 for fewer than
/// two values.
inline double standard_error(const std::vector<double>& values) {
    const auto n = values.size();
    if (n < 2) return 0.0;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double var = ss / static_cast<double>(n - 1);
    return std::sqrt(var / static_cast<double>(n));
}

/// Full reconstruction report against a known signal. A constant estimate
/// makes the correlation undefined; it is reported as 0 so failed trials
/// (for instance an all-zero estimate) aggregate cleanly.
inline ReconReport make_report(const SparseSignal& truth, const Vector& w_hat,
                               bool converged, int sweeps) {
    ReconReport rep;
    rep.converged = converged;
    rep.sweeps = sweeps;
    rep.mse = mse(truth.values, w_hat);
    const MseDecomposition dec = mse_decomposition(truth, w_hat);
    rep.mse_head = dec.head;
    rep.mse_tail = dec.tail;
    rep.head_defined = dec.head_defined;
    rep.tail_defined = dec.tail_defined;
    try {
        rep.pearson_r = pearson_r(truth.values, w_hat);
    } catch (const ParameterError&) {
        rep.pearson_r = 0.0;
    }
    return rep;
}

} // namespace epsense
