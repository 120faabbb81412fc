#pragma once

// Exact simulation of the OU coordinate ensemble G_i(lambda_i t), synthesis
// of X_t = sum_i G_i(lambda_i t) S_i, the Y/Z/A decomposition, and the
// fourth-moment increment scan.
//
// Every transition uses the closed-form conditional law
//   G(lambda(t+u)) | G(lambda t) = g  ~  N(g e^{-lambda u}, 1 - e^{-2 lambda u}),
// never an Euler step.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "ouqv/basis.hpp"
#include "ouqv/parallel.hpp"
#include "ouqv/rng.hpp"
#include "ouqv/spectrum.hpp"

namespace ouqv::ou {

// One exact transition of G(lambda .) over time step u given the normal draw xi.
inline double ou_step(double g, double lambda, double u, double xi) {
    const double decay = std::exp(-lambda * u);
    return g * decay + std::sqrt(1.0 - decay * decay) * xi;
}

// Exact-coupled martingale increment: conditional on the transition draw xi
// over [t, t+u], Delta Y = int e^{-lambda v} dW(e^{2 lambda v} - 1) is jointly
// Gaussian with the driving increment; eta supplies the orthogonal part.
//   beta * DeltaM = 2 (1-q)/sqrt(1-q^2) * xi,    q = e^{-lambda u}
//   residual variance = 2 lambda u - 4 (1-q)/(1+q)
inline double coupled_y_increment(double lambda, double u, double xi, double eta) {
    const double q = std::exp(-lambda * u);
    const double one_minus_q = -std::expm1(-lambda * u);
    const double coupled = 2.0 * one_minus_q / std::sqrt(1.0 - q * q) * xi;
    const double resid_var =
        std::max(0.0, 2.0 * lambda * u - 4.0 * one_minus_q / (1.0 + q));
    return coupled + std::sqrt(resid_var) * eta;
}

// Grid-sampled coordinate trajectory of the truncated ensemble. Row j holds
// G_i(lambda_i t_j) for all i; optional per-step noise is retained so Y can be
// reconstructed pathwise-coupled to X.
struct FieldPath {
    std::vector<double> times; // t_0 = 0 < ... < t_K
    std::int64_t n = 0;        // coordinate count
    std::vector<double> coords; // (K+1) x n, row-major
    std::vector<double> xi;     // K x n transition draws (empty unless retained)
    std::vector<double> eta;    // K x n orthogonal draws (empty unless retained)

    std::int64_t step_count() const { return static_cast<std::int64_t>(times.size()) - 1; }
    const double* row(std::int64_t j) const {
        return coords.data() + static_cast<std::size_t>(j) * static_cast<std::size_t>(n);
    }
    double coord(std::int64_t j, std::int64_t i) const { return row(j)[i]; }
};

// RNG stream ids used by the simulation harness.
namespace stream {
inline constexpr std::uint64_t kTransition = 0;
inline constexpr std::uint64_t kCoupling = 1;
inline constexpr std::uint64_t kTheta = 2;
inline constexpr std::uint64_t kYIncrements = 3;
} // namespace stream

// Simulates the coordinate ensemble on the given time grid. Coordinates are
// independent across i and Markov in j; the draw order (per step, per
// coordinate) is fixed so results never depend on the caller's parallelism.
inline FieldPath simulate_ensemble(const spectrum::SpectrumSpec& spec, std::int64_t n,
                                   const std::vector<double>& initials,
                                   const std::vector<double>& times, std::uint64_t seed,
                                   std::uint64_t path_id, bool retain_noise = false) {
    if (times.empty() || times.front() != 0.0)
        throw std::invalid_argument("simulate_ensemble: time grid must start at 0");
    for (std::size_t j = 1; j < times.size(); ++j)
        if (!(times[j] > times[j - 1]))
            throw std::invalid_argument("simulate_ensemble: time grid must be strictly increasing");
    if (!initials.empty() && static_cast<std::int64_t>(initials.size()) != n)
        throw std::invalid_argument("simulate_ensemble: initials length must equal n");

    FieldPath path;
    path.times = times;
    path.n = n;
    const std::int64_t K = path.step_count();
    path.coords.assign(static_cast<std::size_t>((K + 1) * n), 0.0);
    if (!initials.empty())
        for (std::int64_t i = 0; i < n; ++i) path.coords[static_cast<std::size_t>(i)] = initials[static_cast<std::size_t>(i)];
    if (retain_noise) {
        path.xi.assign(static_cast<std::size_t>(K * n), 0.0);
        path.eta.assign(static_cast<std::size_t>(K * n), 0.0);
    }

    rng::NormalStream zs(seed, path_id, stream::kTransition);
    rng::NormalStream es(seed, path_id, stream::kCoupling);
    std::vector<double> lambdas(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) lambdas[static_cast<std::size_t>(i)] = spec.lambda_at(i + 1);

    for (std::int64_t j = 0; j < K; ++j) {
        const double u = times[static_cast<std::size_t>(j + 1)] - times[static_cast<std::size_t>(j)];
        const double* prev = path.coords.data() + static_cast<std::size_t>(j * n);
        double* next = path.coords.data() + static_cast<std::size_t>((j + 1) * n);
        for (std::int64_t i = 0; i < n; ++i) {
            const double z = zs.next();
            next[i] = ou_step(prev[i], lambdas[static_cast<std::size_t>(i)], u, z);
            if (retain_noise) {
                path.xi[static_cast<std::size_t>(j * n + i)] = z;
                path.eta[static_cast<std::size_t>(j * n + i)] = es.next();
            }
        }
    }
    return path;
}

// X_{t_j} sampled on the grid; exact for the truncated series.
inline basis::GridField synthesize_field(const FieldPath& path, std::int64_t j_time,
                                         const basis::SynthTable& table) {
    if (j_time < 0 || j_time >= static_cast<std::int64_t>(path.times.size()))
        throw std::out_of_range("synthesize_field: time index out of range");
    if (basis::truncation_count(table.M, table.d) != path.n)
        throw std::invalid_argument("synthesize_field: table truncation does not match path");
    return table.synthesize_field(path.row(j_time));
}

// Deterministic drift coordinates A_t: e^{-lambda_i t} G_i(0).
inline std::vector<double> synthesize_A(const spectrum::SpectrumSpec& spec,
                                        const std::vector<double>& initials, double t) {
    if (t < 0.0) throw std::invalid_argument("synthesize_A: t must be >= 0");
    std::vector<double> out(initials.size());
    for (std::size_t i = 0; i < initials.size(); ++i)
        out[i] = std::exp(-spec.lambda_at(static_cast<std::int64_t>(i) + 1) * t) * initials[i];
    return out;
}

// Independent Gaussian increments Delta_{i,j} Y ~ N(0, 2 lambda_i dt_j),
// independent across coordinates and cells.
inline std::vector<double> simulate_y_increments(const spectrum::SpectrumSpec& spec,
                                                 const std::vector<double>& partition,
                                                 std::int64_t n, std::uint64_t seed,
                                                 std::uint64_t path_id) {
    if (partition.size() < 2)
        throw std::invalid_argument("simulate_y_increments: need at least one cell");
    for (std::size_t j = 1; j < partition.size(); ++j)
        if (!(partition[j] >= partition[j - 1]))
            throw std::invalid_argument("simulate_y_increments: partition must be nondecreasing");
    const std::int64_t K = static_cast<std::int64_t>(partition.size()) - 1;
    std::vector<double> inc(static_cast<std::size_t>(K * n));
    rng::NormalStream zs(seed, path_id, stream::kYIncrements);
    for (std::int64_t j = 0; j < K; ++j) {
        const double dt = partition[static_cast<std::size_t>(j + 1)] - partition[static_cast<std::size_t>(j)];
        for (std::int64_t i = 0; i < n; ++i) {
            const double sd = std::sqrt(2.0 * spec.lambda_at(i + 1) * dt);
            inc[static_cast<std::size_t>(j * n + i)] = sd * zs.next();
        }
    }
    return inc;
}

// Coordinatewise X = Y + Z + A sample on the path's time grid. Z comes out two
// ways: as the exact residual X - Y - A, and by trapezoid quadrature of
//   Z_t = -int_0^t lambda (G(lambda u) - e^{-lambda u} G(0)) du
// on the path grid itself (the path should be simulated on the refinement).
struct DecompositionSample {
    std::vector<double> times;
    std::int64_t n = 0;
    std::vector<double> y;          // (K+1) x n cumulative martingale part
    std::vector<double> a;          // (K+1) x n drift part
    std::vector<double> z_residual; // (K+1) x n
    std::vector<double> z_quadrature; // (K+1) x n
};

inline DecompositionSample decompose_path(const spectrum::SpectrumSpec& spec,
                                          const FieldPath& path,
                                          const std::vector<double>& initials) {
    if (path.xi.empty() || path.eta.empty())
        throw std::invalid_argument("decompose_path: path must retain its noise record");
    const std::int64_t n = path.n;
    const std::int64_t K = path.step_count();
    DecompositionSample out;
    out.times = path.times;
    out.n = n;
    out.y.assign(static_cast<std::size_t>((K + 1) * n), 0.0);
    out.a.assign(static_cast<std::size_t>((K + 1) * n), 0.0);
    out.z_residual.assign(static_cast<std::size_t>((K + 1) * n), 0.0);
    out.z_quadrature.assign(static_cast<std::size_t>((K + 1) * n), 0.0);

    std::vector<double> lambdas(static_cast<std::size_t>(n));
    std::vector<double> g0(static_cast<std::size_t>(n), 0.0);
    for (std::int64_t i = 0; i < n; ++i) {
        lambdas[static_cast<std::size_t>(i)] = spec.lambda_at(i + 1);
        if (!initials.empty()) g0[static_cast<std::size_t>(i)] = initials[static_cast<std::size_t>(i)];
    }

    for (std::int64_t j = 0; j <= K; ++j) {
        const double t = path.times[static_cast<std::size_t>(j)];
        for (std::int64_t i = 0; i < n; ++i) {
            const std::size_t at = static_cast<std::size_t>(j * n + i);
            out.a[at] = std::exp(-lambdas[static_cast<std::size_t>(i)] * t) * g0[static_cast<std::size_t>(i)];
        }
    }
    for (std::int64_t j = 0; j < K; ++j) {
        const double u = path.times[static_cast<std::size_t>(j + 1)] - path.times[static_cast<std::size_t>(j)];
        for (std::int64_t i = 0; i < n; ++i) {
            const std::size_t at = static_cast<std::size_t>(j * n + i);
            const std::size_t next = static_cast<std::size_t>((j + 1) * n + i);
            const double dy = coupled_y_increment(lambdas[static_cast<std::size_t>(i)], u,
                                                  path.xi[at], path.eta[at]);
            out.y[next] = out.y[at] + dy;
            // trapezoid cell of -lambda (G - A)
            const double f0 = -lambdas[static_cast<std::size_t>(i)] *
                              (path.coords[at] - out.a[at]);
            const double f1 = -lambdas[static_cast<std::size_t>(i)] *
                              (path.coords[next] - out.a[next]);
            out.z_quadrature[next] = out.z_quadrature[at] + 0.5 * u * (f0 + f1);
        }
    }
    for (std::int64_t j = 0; j <= K; ++j)
        for (std::int64_t i = 0; i < n; ++i) {
            const std::size_t at = static_cast<std::size_t>(j * n + i);
            out.z_residual[at] = path.coords[at] - out.y[at] - out.a[at];
        }
    return out;
}

// Monte Carlo table of E ||X_{t+u} - X_t||^4 (sup norm) per u, with a log-log
// slope fit across the u values.
struct MomentScanRow {
    double u;
    double estimate;
    double stderr_est;
};

struct MomentScan {
    std::vector<MomentScanRow> rows;
    double loglog_slope = 0.0;
};

inline MomentScan fourth_moment_scan(const spectrum::SpectrumSpec& spec, int M,
                                     const std::vector<double>& initials, double t,
                                     const std::vector<double>& u_list, std::int64_t N,
                                     std::uint64_t seed, const basis::SynthTable& table,
                                     int workers) {
    for (double u : u_list)
        if (!(u > 0.0 && u <= 1.0))
            throw std::invalid_argument("fourth_moment_scan: u values must lie in (0,1]");
    const std::int64_t n = basis::truncation_count(M, spec.d());
    std::vector<double> times;
    times.push_back(0.0);
    if (t > 0.0) times.push_back(t);
    for (double u : u_list) times.push_back(t + u);
    // times after t must be sorted for the simulator: sort and remember slots
    std::vector<double> grid(times.begin(), times.end());
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    std::vector<std::vector<double>> samples(u_list.size(),
                                             std::vector<double>(static_cast<std::size_t>(N)));
    auto index_of = [&grid](double v) {
        for (std::size_t j = 0; j < grid.size(); ++j)
            if (grid[j] == v) return static_cast<std::int64_t>(j);
        throw std::logic_error("fourth_moment_scan: grid lookup failed");
    };
    const std::int64_t j_base = index_of(t);
    std::vector<std::int64_t> j_u(u_list.size());
    for (std::size_t k = 0; k < u_list.size(); ++k) j_u[k] = index_of(t + u_list[k]);

    par::for_each_path(N, workers, [&](std::int64_t p) {
        const FieldPath path = simulate_ensemble(spec, n, initials, grid, seed, static_cast<std::uint64_t>(p));
        std::vector<double> diff(static_cast<std::size_t>(n));
        std::vector<double> scratch;
        for (std::size_t k = 0; k < u_list.size(); ++k) {
            const double* a = path.row(j_base);
            const double* b = path.row(j_u[k]);
            for (std::int64_t i = 0; i < n; ++i) diff[static_cast<std::size_t>(i)] = b[i] - a[i];
            const double nrm = table.coord_norm(diff.data(), basis::NormKind::SupNorm, scratch);
            samples[k][static_cast<std::size_t>(p)] = nrm * nrm * nrm * nrm;
        }
    });

    MomentScan scan;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < u_list.size(); ++k) {
        par::RunningStat stat;
        for (double v : samples[k]) stat.add(v);
        scan.rows.push_back({u_list[k], stat.mean, stat.stderr_mean()});
        const double lx = std::log(u_list[k]);
        const double ly = std::log(stat.mean);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double m = static_cast<double>(u_list.size());
    scan.loglog_slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    return scan;
}

} // namespace ouqv::ou
