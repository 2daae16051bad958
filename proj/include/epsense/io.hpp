#pragma once

#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "types.hpp"
#include "version.hpp"

namespace epsense {

using json = nlohmann::ordered_json;

/// 17 significant digits: enough for exact double round-trips.
inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    return out;
}

inline std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open for reading: " + path.string());
    return in;
}

} // namespace detail

/// Matrix text format: first line "M N", then M rows of N space-separated
/// values at 17 significant digits.
inline void write_matrix(const std::filesystem::path& path, const Matrix& m) {
    auto out = detail::open_out(path);
    out << m.rows() << ' ' << m.cols() << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out << ' ';
            out << fmt17(m(i, j));
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

inline Matrix read_matrix(const std::filesystem::path& path) {
    auto in = detail::open_in(path);
    Eigen::Index rows = 0, cols = 0;
    if (!(in >> rows >> cols) || rows < 0 || cols < 0)
        throw IoError("malformed matrix header in " + path.string());
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j)
            if (!(in >> m(i, j)))
                throw IoError("malformed matrix body in " + path.string());
    return m;
}

/// Vector text format: one value per line, 17 significant digits.
inline void write_vector(const std::filesystem::path& path, const Vector& v) {
    auto out = detail::open_out(path);
    for (Eigen::Index i = 0; i < v.size(); ++i) out << fmt17(v[i]) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

inline Vector read_vector(const std::filesystem::path& path) {
    auto in = detail::open_in(path);
    std::vector<double> vals;
    double x;
    while (in >> x) vals.push_back(x);
    if (!in.eof()) throw IoError("malformed vector in " + path.string());
    Vector v(static_cast<Eigen::Index>(vals.size()));
    for (std::size_t i = 0; i < vals.size(); ++i)
        v[static_cast<Eigen::Index>(i)] = vals[i];
    return v;
}

inline void write_json(const std::filesystem::path& path, const json& j) {
    auto out = detail::open_out(path);
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

inline json read_json(const std::filesystem::path& path) {
    auto in = detail::open_in(path);
    try {
        return json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed JSON in " + path.string() + ": " + e.what());
    }
}

struct RunManifest {
    std::string command;
    json config;
    std::uint64_t root_seed = 0;
    std::string started_at;
    std::string finished_at;
};

inline std::string iso_utc_now(bool fixed_timing) {
    if (fixed_timing) return "1970-01-01T00:00:00Z";
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline void write_manifest(const std::filesystem::path& path, const RunManifest& m) {
    json j;
    j["artifact_version"] = kArtifactVersion;
    j["command"] = m.command;
    j["root_seed"] = m.root_seed;
    j["config"] = m.config;
    j["started_at"] = m.started_at;
    j["finished_at"] = m.finished_at;
    write_json(path, j);
}

/// Manifest sidecar path: <dir>/manifest.json for a directory output,
/// <file>.manifest.json next to a file output.
inline std::filesystem::path manifest_path_for(const std::filesystem::path& output) {
    if (std::filesystem::is_directory(output)) return output / "manifest.json";
    auto p = output;
    p += ".manifest.json";
    return p;
}

/// Problem bundle: a directory with F.mat, y.vec, optional w.vec, meta.json.
inline void write_bundle(const std::filesystem::path& dir, const SensingProblem& p) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create bundle directory " + dir.string());
    write_matrix(dir / "F.mat", p.matrix.entries);
    write_vector(dir / "y.vec", p.y);
    if (p.truth) write_vector(dir / "w.vec", p.truth->values);

    json meta;
    meta["artifact_version"] = kArtifactVersion;
    meta["seed"] = p.seed;
    meta["n"] = p.matrix.cols();
    meta["m"] = p.matrix.rows();
    meta["rho"] = p.truth ? p.truth->rho_true : 0.0;
    meta["lambda"] = p.truth ? p.truth->lambda_true : 1.0;
    meta["k"] = p.matrix.correlation_rank;
    meta["noise_variance"] = p.noise_variance;
    meta["matrix_kind"] = (p.matrix.kind == MatrixKind::Correlated) ? "correlated" : "iid";
    meta["has_truth"] = static_cast<bool>(p.truth);
    meta["manifest"] = "manifest.json";
    write_json(dir / "meta.json", meta);
}

inline SensingProblem read_bundle(const std::filesystem::path& dir) {
    const json meta = read_json(dir / "meta.json");
    SensingProblem p;
    try {
        p.matrix.entries = read_matrix(dir / "F.mat");
        p.y = read_vector(dir / "y.vec");
        p.seed = meta.at("seed").get<std::uint64_t>();
        p.noise_variance = meta.at("noise_variance").get<double>();
        const std::string kind = meta.at("matrix_kind").get<std::string>();
        p.matrix.kind = (kind == "correlated") ? MatrixKind::Correlated : MatrixKind::IID;
        p.matrix.correlation_rank = meta.at("k").get<int>();
        if (meta.at("has_truth").get<bool>()) {
            SparseSignal w;
            w.values = read_vector(dir / "w.vec");
            w.rho_true = meta.at("rho").get<double>();
            w.lambda_true = meta.at("lambda").get<double>();
            for (Eigen::Index i = 0; i < w.values.size(); ++i)
                if (w.values[i] != 0.0) w.support.push_back(static_cast<int>(i));
            p.truth = std::move(w);
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError("bundle metadata error in " + dir.string() + ": " + e.what());
    }
    if (p.matrix.entries.rows() != p.y.size())
        throw IoError("bundle dimensions disagree between F.mat and y.vec");
    if (p.truth && p.truth->values.size() != p.matrix.entries.cols())
        throw IoError("bundle dimensions disagree between F.mat and w.vec");
    return p;
}

/// Phase-map CSV, one row per trial.
inline std::string phase_points_csv(const std::vector<PhasePoint>& points) {
    std::ostringstream out;
    out << "rho,alpha,N,trial,seed,converged,sweeps,r,mse,mse_head,mse_tail,wall_ms\n";
    for (const auto& p : points) {
        out << fmt17(p.rho) << ',' << fmt17(p.alpha) << ',' << p.n << ',' << p.trial
            << ',' << p.seed << ',' << (p.converged ? 1 : 0) << ',' << p.sweeps << ','
            << fmt17(p.r) << ',' << fmt17(p.mse) << ',' << fmt17(p.mse_head) << ','
            << fmt17(p.mse_tail) << ',' << fmt17(p.wall_ms) << '\n';
    }
    return out.str();
}

struct TransitionRow {
    double rho = 0.0;
    double alpha_l0 = 0.0;
    double alpha_l1 = 0.0;
    double alpha_ep = 0.0;
};

inline std::string transition_csv(const std::vector<TransitionRow>& rows) {
    std::ostringstream out;
    out << "rho,alpha_l0,alpha_l1,alpha_ep\n";
    for (const auto& r : rows)
        out << fmt17(r.rho) << ',' << fmt17(r.alpha_l0) << ',' << fmt17(r.alpha_l1)
            << ',' << fmt17(r.alpha_ep) << '\n';
    return out.str();
}

struct CompareRow {
    double rho = 0.0;
    double alpha = 0.0;
    int n = 0;
    int trial = 0;
    std::uint64_t seed = 0;
    std::string solver;
    bool converged = false;
    int sweeps = 0;
    double mse = 0.0;
    double wall_ms = 0.0;
};

inline std::string compare_csv(const std::vector<CompareRow>& rows) {
    std::ostringstream out;
    out << "rho,alpha,N,trial,seed,solver,converged,sweeps,mse,wall_ms\n";
    for (const auto& r : rows)
        out << fmt17(r.rho) << ',' << fmt17(r.alpha) << ',' << r.n << ',' << r.trial
            << ',' << r.seed << ',' << r.solver << ',' << (r.converged ? 1 : 0) << ','
            << r.sweeps << ',' << fmt17(r.mse) << ',' << fmt17(r.wall_ms) << '\n';
    return out.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    auto out = detail::open_out(path);
    out << text;
    if (!out) throw IoError("write failed: " + path.string());
}

} // namespace epsense
