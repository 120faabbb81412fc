#pragma once

// Scalar quadratic variation over partitions and by regularization, tensor
// quadratic variation, and the limits theta / Theta with independent oracles.
//
// Monte Carlo estimators take a PathEnsemble recipe rather than materialized
// paths; each path is simulated from its (seed, path_id) stream on demand, so
// results are bit-identical for any worker count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ouqv/basis.hpp"
#include "ouqv/ou_field.hpp"
#include "ouqv/parallel.hpp"
#include "ouqv/rng.hpp"
#include "ouqv/spectrum.hpp"

namespace ouqv::qv {

struct Partition {
    std::vector<double> points; // 0 = t_0 < ... < t_K = T
    double mesh = 0.0;

    explicit Partition(std::vector<double> pts) : points(std::move(pts)) {
        if (points.size() < 2 || points.front() != 0.0)
            throw std::invalid_argument("Partition: need points 0 = t_0 < ... < t_K");
        for (std::size_t j = 1; j < points.size(); ++j) {
            const double w = points[j] - points[j - 1];
            if (!(w > 0.0)) throw std::invalid_argument("Partition: zero-width cell");
            mesh = std::max(mesh, w);
        }
    }

    // Uniform dyadic partition of [0,T] with 2^depth cells.
    static Partition dyadic(double T, int depth) {
        if (!(T > 0.0) || depth < 1 || depth > 30)
            throw std::invalid_argument("Partition::dyadic: bad arguments");
        const std::int64_t K = std::int64_t{1} << depth;
        std::vector<double> pts(static_cast<std::size_t>(K) + 1);
        for (std::int64_t j = 0; j <= K; ++j)
            pts[static_cast<std::size_t>(j)] = T * static_cast<double>(j) / static_cast<double>(K);
        return Partition(std::move(pts));
    }
};

// Recipe for an iid collection of simulated field paths on a common time grid.
struct PathEnsemble {
    const spectrum::SpectrumSpec* spec = nullptr;
    std::int64_t n = 0; // coordinate count d*2^{M+1}
    std::vector<double> initials;
    std::vector<double> times;
    std::uint64_t seed = 0;
    std::int64_t n_paths = 0;
    int workers = 1;
};

// Which component of X = Y + Z + A enters the increment sums.
enum class Component { Full, DriftOnly };

struct ThetaEstimate {
    double value = 0.0;
    double se = 0.0; // zero for deterministic oracles
    std::string provenance; // "mc" | "quadrature" | "closed-form"
};

struct QVEstimate {
    basis::NormKind kind = basis::NormKind::SupNorm;
    std::vector<double> times;
    std::vector<double> mean; // QV estimate per time
    std::vector<double> se;
    ThetaEstimate theta_ref;
    double mesh = 0.0; // partition mesh, or delta for regularized estimates
    std::int64_t n_paths = 0;

    double terminal() const { return mean.empty() ? 0.0 : mean.back(); }
    double terminal_se() const { return se.empty() ? 0.0 : se.back(); }

    // Least-squares slope of QV(t) against t through the origin-free fit.
    double slope_vs_time() const {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double m = static_cast<double>(times.size());
        for (std::size_t j = 0; j < times.size(); ++j) {
            sx += times[j];
            sy += mean[j];
            sxx += times[j] * times[j];
            sxy += times[j] * mean[j];
        }
        return (m * sxy - sx * sy) / (m * sxx - sx * sx);
    }
};

namespace detail {

inline std::vector<std::int64_t> locate_partition(const std::vector<double>& grid,
                                                  const Partition& part) {
    std::vector<std::int64_t> idx;
    idx.reserve(part.points.size());
    std::size_t q = 0;
    for (double p : part.points) {
        while (q < grid.size() && grid[q] < p - 1e-12) ++q;
        if (q >= grid.size() || std::fabs(grid[q] - p) > 1e-12)
            throw std::invalid_argument("partition not nested in the path time grid");
        idx.push_back(static_cast<std::int64_t>(q));
    }
    return idx;
}

// Coordinates of the selected component at every node of the path's grid.
// Full: X itself. DriftOnly: X - Y with Y reconstructed from the retained
// noise, i.e. Z + A.
inline std::vector<double> component_coords(const spectrum::SpectrumSpec& spec,
                                            const ou::FieldPath& path, Component comp) {
    if (comp == Component::Full) return path.coords;
    std::vector<double> out = path.coords;
    const std::int64_t n = path.n;
    const std::int64_t K = path.step_count();
    std::vector<double> y(static_cast<std::size_t>(n), 0.0);
    for (std::int64_t j = 0; j < K; ++j) {
        const double u = path.times[static_cast<std::size_t>(j + 1)] - path.times[static_cast<std::size_t>(j)];
        for (std::int64_t i = 0; i < n; ++i) {
            const std::size_t at = static_cast<std::size_t>(j * n + i);
            y[static_cast<std::size_t>(i)] += ou::coupled_y_increment(
                spec.lambda_at(i + 1), u, path.xi[at], path.eta[at]);
            out[static_cast<std::size_t>((j + 1) * n + i)] -= y[static_cast<std::size_t>(i)];
        }
    }
    return out;
}

// Fixed-order reduction of a per-time sample matrix (time-major slots).
inline void reduce_samples(const std::vector<double>& samples, std::int64_t n_times,
                           std::int64_t n_paths, std::vector<double>& mean,
                           std::vector<double>& se) {
    mean.assign(static_cast<std::size_t>(n_times), 0.0);
    se.assign(static_cast<std::size_t>(n_times), 0.0);
    for (std::int64_t t = 0; t < n_times; ++t) {
        par::RunningStat stat;
        for (std::int64_t p = 0; p < n_paths; ++p)
            stat.add(samples[static_cast<std::size_t>(t * n_paths + p)]);
        mean[static_cast<std::size_t>(t)] = stat.mean;
        se[static_cast<std::size_t>(t)] = stat.stderr_mean();
    }
}

} // namespace detail

// Per path, sum_{j: t_j <= t} ||X_{t_j} - X_{t_{j-1}}||^2 at the partition
// points, averaged across paths. Component::DriftOnly replaces X by Z + A.
inline QVEstimate scalar_qv_partition(const PathEnsemble& ens, const Partition& part,
                                      basis::NormKind kind, const basis::SynthTable& table,
                                      Component comp = Component::Full) {
    const auto idx = detail::locate_partition(ens.times, part);
    const std::int64_t n_times = static_cast<std::int64_t>(idx.size());
    const std::int64_t N = ens.n_paths;
    std::vector<double> samples(static_cast<std::size_t>(n_times * N));
    const bool retain = comp != Component::Full;

    par::for_each_path(N, ens.workers, [&](std::int64_t p) {
        const ou::FieldPath path = ou::simulate_ensemble(
            *ens.spec, ens.n, ens.initials, ens.times, ens.seed,
            static_cast<std::uint64_t>(p), retain);
        const std::vector<double> coords = detail::component_coords(*ens.spec, path, comp);
        std::vector<double> diff(static_cast<std::size_t>(ens.n));
        std::vector<double> scratch;
        double acc = 0.0;
        samples[static_cast<std::size_t>(p)] = 0.0; // t_0
        for (std::int64_t j = 1; j < n_times; ++j) {
            const double* a = coords.data() + static_cast<std::size_t>(idx[static_cast<std::size_t>(j - 1)] * ens.n);
            const double* b = coords.data() + static_cast<std::size_t>(idx[static_cast<std::size_t>(j)] * ens.n);
            for (std::int64_t i = 0; i < ens.n; ++i) diff[static_cast<std::size_t>(i)] = b[i] - a[i];
            const double nrm = table.coord_norm(diff.data(), kind, scratch);
            acc += nrm * nrm;
            samples[static_cast<std::size_t>(j * N + p)] = acc;
        }
    });

    QVEstimate est;
    est.kind = kind;
    est.times = part.points;
    est.mesh = part.mesh;
    est.n_paths = N;
    detail::reduce_samples(samples, n_times, N, est.mean, est.se);
    return est;
}

// theta-hat = (2/N) sum_paths || sum_i lambda_i^{1/2} xi_i S_i ||^2.
inline ThetaEstimate theta_mc(const spectrum::SpectrumSpec& spec, basis::NormKind kind,
                              int M, std::int64_t N, std::uint64_t seed,
                              const basis::SynthTable& table, int workers) {
    if (N < 1) throw std::invalid_argument("theta_mc: N must be >= 1");
    const std::int64_t n = basis::truncation_count(M, spec.d());
    std::vector<double> sqrt_lambda(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i)
        sqrt_lambda[static_cast<std::size_t>(i)] = std::sqrt(spec.lambda_at(i + 1));
    std::vector<double> samples(static_cast<std::size_t>(N));
    par::for_each_path(N, workers, [&](std::int64_t p) {
        rng::NormalStream zs(seed, static_cast<std::uint64_t>(p), ou::stream::kTheta);
        std::vector<double> coords(static_cast<std::size_t>(n));
        std::vector<double> scratch;
        for (std::int64_t i = 0; i < n; ++i)
            coords[static_cast<std::size_t>(i)] = sqrt_lambda[static_cast<std::size_t>(i)] * zs.next();
        const double nrm = table.coord_norm(coords.data(), kind, scratch);
        samples[static_cast<std::size_t>(p)] = 2.0 * nrm * nrm;
    });
    par::RunningStat stat;
    for (double v : samples) stat.add(v);
    return {stat.mean, stat.stderr_mean(), "mc"};
}

namespace detail {

// E|XY| for jointly normal zero-mean X, Y with sds sx, sy and correlation rho.
inline double abs_product_moment(double sx, double sy, double rho) {
    if (sx == 0.0 || sy == 0.0) return 0.0;
    if (std::fabs(rho) > 1.0 + 1e-6)
        throw std::runtime_error("abs_product_moment: correlation out of range");
    const double r = std::clamp(rho, -1.0, 1.0);
    return (2.0 / M_PI) * sx * sy * (r * std::asin(r) + std::sqrt(std::max(0.0, 1.0 - r * r)));
}

} // namespace detail

// Deterministic theta for the L1 norm: with g the centered Gaussian field with
// covariance C_ab(u,v) = sum_i lambda_i S_i(u)_a S_i(v)_b,
//   theta = 2 sum_{a,b} int int E|g_a(u) g_b(v)| du dv.
// A single index contributes to one coordinate only, so C_ab vanishes for
// a != b and cross-coordinate cells factorize through rho = 0.
inline ThetaEstimate theta_l1_quadrature(const spectrum::SpectrumSpec& spec, int M,
                                         int quad_depth) {
    if (quad_depth < M + 2)
        throw std::invalid_argument("theta_l1_quadrature: quad_depth must be >= M+2");
    const int d = spec.d();
    const std::int64_t R = std::int64_t{1} << (M + 1); // Haar indices per coordinate
    const std::int64_t nodes = (std::int64_t{1} << quad_depth) + 1;
    const double h = std::ldexp(1.0, -quad_depth);

    // scalar Schauder profiles P_r(u_q), shared across coordinates
    std::vector<double> P(static_cast<std::size_t>(R * nodes), 0.0);
    for (std::int64_t r = 1; r <= R; ++r) {
        basis::BasisIndex idx = basis::decompose_index(r, 1);
        for (std::int64_t q = 0; q < nodes; ++q)
            P[static_cast<std::size_t>((r - 1) * nodes + q)] =
                basis::schauder_profile(idx, static_cast<double>(q) * h);
    }
    auto weight = [&](std::int64_t q) { return (q == 0 || q == nodes - 1) ? 0.5 * h : h; };
    auto cov = [&](int a, std::int64_t qu, std::int64_t qv) {
        double c = 0.0;
        for (std::int64_t r = 1; r <= R; ++r)
            c += spec.lambda_at(d * (r - 1) + a) *
                 P[static_cast<std::size_t>((r - 1) * nodes + qu)] *
                 P[static_cast<std::size_t>((r - 1) * nodes + qv)];
        return c;
    };

    std::vector<std::vector<double>> sigma(static_cast<std::size_t>(d));
    std::vector<double> sigma_integral(static_cast<std::size_t>(d), 0.0);
    for (int a = 1; a <= d; ++a) {
        auto& s = sigma[static_cast<std::size_t>(a - 1)];
        s.resize(static_cast<std::size_t>(nodes));
        for (std::int64_t q = 0; q < nodes; ++q) {
            s[static_cast<std::size_t>(q)] = std::sqrt(std::max(0.0, cov(a, q, q)));
            sigma_integral[static_cast<std::size_t>(a - 1)] += weight(q) * s[static_cast<std::size_t>(q)];
        }
    }

    double total = 0.0;
    for (int a = 1; a <= d; ++a) {
        // diagonal block: correlated cells
        const auto& s = sigma[static_cast<std::size_t>(a - 1)];
        for (std::int64_t qu = 0; qu < nodes; ++qu) {
            const double su = s[static_cast<std::size_t>(qu)];
            for (std::int64_t qv = 0; qv < nodes; ++qv) {
                const double sv = s[static_cast<std::size_t>(qv)];
                if (su == 0.0 || sv == 0.0) continue;
                const double rho = cov(a, qu, qv) / (su * sv);
                total += weight(qu) * weight(qv) * detail::abs_product_moment(su, sv, rho);
            }
        }
        // off-diagonal blocks: independent coordinates, separable integral
        for (int b = 1; b <= d; ++b) {
            if (b == a) continue;
            total += (2.0 / M_PI) * sigma_integral[static_cast<std::size_t>(a - 1)] *
                     sigma_integral[static_cast<std::size_t>(b - 1)];
        }
    }
    return {2.0 * total, 0.0, "quadrature"};
}

// (1/delta) int_0^t ||X_{s+delta} - X_s||^2 ds by left-point sums on the
// path's uniform grid; evaluated at every grid time t <= T - delta.
inline QVEstimate regularized_qv(const PathEnsemble& ens, double delta, basis::NormKind kind,
                                 const basis::SynthTable& table) {
    const std::size_t K = ens.times.size() - 1;
    const double h = ens.times[1] - ens.times[0];
    for (std::size_t j = 1; j <= K; ++j)
        if (std::fabs(ens.times[j] - ens.times[j - 1] - h) > 1e-12 * std::max(1.0, h))
            throw std::invalid_argument("regularized_qv: path grid must be uniform");
    const double ratio = delta / h;
    const std::int64_t lag = static_cast<std::int64_t>(std::llround(ratio));
    if (lag < 1 || std::fabs(ratio - static_cast<double>(lag)) > 1e-9)
        throw std::invalid_argument("regularized_qv: delta must be a positive multiple of the time step");
    const std::int64_t n_times = static_cast<std::int64_t>(K) + 1 - lag; // t = t_0 .. T - delta
    if (n_times < 2) throw std::invalid_argument("regularized_qv: delta too large for the grid");

    const std::int64_t N = ens.n_paths;
    std::vector<double> samples(static_cast<std::size_t>(n_times * N));
    par::for_each_path(N, ens.workers, [&](std::int64_t p) {
        const ou::FieldPath path = ou::simulate_ensemble(
            *ens.spec, ens.n, ens.initials, ens.times, ens.seed, static_cast<std::uint64_t>(p));
        std::vector<double> diff(static_cast<std::size_t>(ens.n));
        std::vector<double> scratch;
        double acc = 0.0;
        samples[static_cast<std::size_t>(p)] = 0.0;
        for (std::int64_t j = 1; j < n_times; ++j) {
            const double* a = path.row(j - 1);
            const double* b = path.row(j - 1 + lag);
            for (std::int64_t i = 0; i < ens.n; ++i) diff[static_cast<std::size_t>(i)] = b[i] - a[i];
            const double nrm = table.coord_norm(diff.data(), kind, scratch);
            acc += h * nrm * nrm;
            samples[static_cast<std::size_t>(j * N + p)] = acc / delta;
        }
    });

    QVEstimate est;
    est.kind = kind;
    est.times.assign(ens.times.begin(), ens.times.begin() + static_cast<std::ptrdiff_t>(n_times));
    est.mesh = delta;
    est.n_paths = N;
    detail::reduce_samples(samples, n_times, N, est.mean, est.se);
    return est;
}

// Grid-sampled d^2-component kernel on [0,1]^2.
struct TensorKernel {
    basis::DyadicGrid grid;
    int d = 1;
    std::vector<double> values; // [((qu * nodes + qv) * d + a0) * d + b0]
    std::string provenance;

    TensorKernel(basis::DyadicGrid g, int dim, std::string prov)
        : grid(g), d(dim),
          values(static_cast<std::size_t>(g.node_count() * g.node_count()) * dim * dim, 0.0),
          provenance(std::move(prov)) {}

    double& at(std::int64_t qu, std::int64_t qv, int a, int b) {
        const std::int64_t nodes = grid.node_count();
        return values[static_cast<std::size_t>(((qu * nodes + qv) * d + (a - 1)) * d + (b - 1))];
    }
    double at(std::int64_t qu, std::int64_t qv, int a, int b) const {
        const std::int64_t nodes = grid.node_count();
        return values[static_cast<std::size_t>(((qu * nodes + qv) * d + (a - 1)) * d + (b - 1))];
    }
};

inline TensorKernel kernel_difference(const TensorKernel& x, const TensorKernel& y) {
    if (x.grid.depth != y.grid.depth || x.d != y.d)
        throw std::invalid_argument("kernel_difference: shape mismatch");
    TensorKernel out(x.grid, x.d, "difference");
    for (std::size_t q = 0; q < out.values.size(); ++q)
        out.values[q] = x.values[q] - y.values[q];
    return out;
}

// K_ab(u,v) = 2 sum_i lambda_i S_i(u)_a S_i(v)_b; independence of the xi_i
// collapses the double sum of the regularized tensor limit to the diagonal.
inline TensorKernel theta_tensor_closed_form(const spectrum::SpectrumSpec& spec, int M,
                                             const basis::DyadicGrid& grid) {
    if (grid.depth < M + 1)
        throw std::invalid_argument("theta_tensor_closed_form: grid depth must be >= M+1");
    const int d = spec.d();
    TensorKernel ker(grid, d, "closed-form");
    const std::int64_t n = basis::truncation_count(M, d);
    const std::int64_t nodes = grid.node_count();
    std::vector<double> prof(static_cast<std::size_t>(nodes));
    for (std::int64_t i = 1; i <= n; ++i) {
        const basis::BasisIndex idx = basis::decompose_index(i, d);
        for (std::int64_t q = 0; q < nodes; ++q)
            prof[static_cast<std::size_t>(q)] = basis::schauder_profile(idx, grid.node(q));
        const double w = 2.0 * spec.lambda_at(i);
        for (std::int64_t qu = 0; qu < nodes; ++qu) {
            const double pu = prof[static_cast<std::size_t>(qu)];
            if (pu == 0.0) continue;
            for (std::int64_t qv = 0; qv < nodes; ++qv) {
                const double pv = prof[static_cast<std::size_t>(qv)];
                if (pv != 0.0) ker.at(qu, qv, idx.j, idx.j) += w * pu * pv;
            }
        }
    }
    return ker;
}

namespace detail {

// Accumulated coordinate-pair matrix B synthesized onto the kernel grid:
// K_ab(u,v) = sum_{i,i'} B[i][i'] S_i(u)_a S_{i'}(v)_b.
inline TensorKernel synthesize_kernel(const std::vector<double>& B, std::int64_t n,
                                      const basis::SynthTable& table, std::string prov) {
    const std::int64_t nodes = table.grid.node_count();
    const int d = table.d;
    // stage 1: T1[(qu,a)][i'] = sum_i S_i(u_qu)_a B[i][i']
    std::vector<double> T1(static_cast<std::size_t>(nodes * d * n), 0.0);
    for (std::int64_t qu = 0; qu < nodes; ++qu)
        for (const auto& e : table.node_entries[static_cast<std::size_t>(qu)]) {
            double* row = T1.data() + static_cast<std::size_t>((qu * d + e.j0) * n);
            const double* brow = B.data() + static_cast<std::size_t>(e.i0) * static_cast<std::size_t>(n);
            for (std::int64_t ip = 0; ip < n; ++ip) row[ip] += e.value * brow[ip];
        }
    TensorKernel ker(table.grid, d, std::move(prov));
    for (std::int64_t qu = 0; qu < nodes; ++qu)
        for (int a = 1; a <= d; ++a) {
            const double* row = T1.data() + static_cast<std::size_t>((qu * d + (a - 1)) * n);
            for (std::int64_t qv = 0; qv < nodes; ++qv)
                for (const auto& e : table.node_entries[static_cast<std::size_t>(qv)])
                    ker.at(qu, qv, a, e.j0 + 1) += row[e.i0] * e.value;
        }
    return ker;
}

inline constexpr std::int64_t kTensorChunk = 64; // paths per accumulator chunk

} // namespace detail

// (1/(t delta)) int_0^t (X_{s+delta} - X_s)(u) (x) (X_{s+delta} - X_s)(v) ds
// at t = T - delta, averaged over paths; accumulation happens in coordinate
// space and is synthesized onto the grid once at the end. Chunked fixed-size
// accumulators keep the reduction order independent of the worker count.
inline TensorKernel tensor_qv(const PathEnsemble& ens, double delta,
                              const basis::SynthTable& table) {
    const std::size_t K = ens.times.size() - 1;
    const double h = ens.times[1] - ens.times[0];
    for (std::size_t j = 1; j <= K; ++j)
        if (std::fabs(ens.times[j] - ens.times[j - 1] - h) > 1e-12 * std::max(1.0, h))
            throw std::invalid_argument("tensor_qv: path grid must be uniform");
    const double ratio = delta / h;
    const std::int64_t lag = static_cast<std::int64_t>(std::llround(ratio));
    if (lag < 1 || std::fabs(ratio - static_cast<double>(lag)) > 1e-9)
        throw std::invalid_argument("tensor_qv: delta must be a positive multiple of the time step");
    const std::int64_t steps = static_cast<std::int64_t>(K) - lag; // left points s = t_0..t_{steps}
    if (steps < 0) throw std::invalid_argument("tensor_qv: delta too large for the grid");
    const double t_end = ens.times[K] - delta;
    if (!(t_end > 0.0)) throw std::invalid_argument("tensor_qv: empty integration range");

    const std::int64_t n = ens.n;
    const std::int64_t N = ens.n_paths;
    const std::int64_t n_chunks = (N + detail::kTensorChunk - 1) / detail::kTensorChunk;
    std::vector<std::vector<double>> chunk_B(
        static_cast<std::size_t>(n_chunks),
        std::vector<double>(static_cast<std::size_t>(n * n), 0.0));

    par::for_each_path(n_chunks, ens.workers, [&](std::int64_t c) {
        std::vector<double>& B = chunk_B[static_cast<std::size_t>(c)];
        std::vector<double> diff(static_cast<std::size_t>(n));
        const std::int64_t lo = c * detail::kTensorChunk;
        const std::int64_t hi = std::min(N, lo + detail::kTensorChunk);
        for (std::int64_t p = lo; p < hi; ++p) {
            const ou::FieldPath path = ou::simulate_ensemble(
                *ens.spec, n, ens.initials, ens.times, ens.seed, static_cast<std::uint64_t>(p));
            for (std::int64_t j = 0; j <= steps; ++j) {
                const double* a = path.row(j);
                const double* b = path.row(j + lag);
                for (std::int64_t i = 0; i < n; ++i) diff[static_cast<std::size_t>(i)] = b[i] - a[i];
                for (std::int64_t i = 0; i < n; ++i) {
                    const double di = diff[static_cast<std::size_t>(i)];
                    if (di == 0.0) continue;
                    double* row = B.data() + static_cast<std::size_t>(i * n);
                    for (std::int64_t ip = 0; ip < n; ++ip)
                        row[ip] += di * diff[static_cast<std::size_t>(ip)];
                }
            }
        }
    });

    std::vector<double> B(static_cast<std::size_t>(n * n), 0.0);
    for (const auto& cb : chunk_B)
        for (std::size_t q = 0; q < B.size(); ++q) B[q] += cb[q];
    const double scale = h / (t_end * delta * static_cast<double>(N));
    for (double& v : B) v *= scale;
    return detail::synthesize_kernel(B, n, table, "mc");
}

// Pointwise MC re-estimate of the tensor limit by direct xi sampling:
// per draw, f = sum_i lambda_i^{1/2} xi_i S_i and the kernel sample at the
// requested nodes is 2 f_a(u) f_b(v). Returns mean and se per entry.
struct TensorPointEstimate {
    std::vector<std::int64_t> nodes; // grid node indices
    int d = 1;
    std::vector<double> mean; // [((p * nodes + q) * d + a0) * d + b0]
    std::vector<double> se;

    std::size_t slot(std::size_t p, std::size_t q, int a, int b) const {
        return ((p * nodes.size() + q) * static_cast<std::size_t>(d) + static_cast<std::size_t>(a - 1)) *
                   static_cast<std::size_t>(d) +
               static_cast<std::size_t>(b - 1);
    }
};

inline TensorPointEstimate theta_tensor_mc(const spectrum::SpectrumSpec& spec, int M,
                                           const basis::SynthTable& table,
                                           const std::vector<std::int64_t>& node_ids,
                                           std::int64_t N, std::uint64_t seed, int workers) {
    const std::int64_t n = basis::truncation_count(M, spec.d());
    const int d = spec.d();
    const std::size_t P = node_ids.size();
    const std::size_t entries = P * P * static_cast<std::size_t>(d) * static_cast<std::size_t>(d);
    std::vector<double> samples(entries * static_cast<std::size_t>(N));
    std::vector<double> sqrt_lambda(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i)
        sqrt_lambda[static_cast<std::size_t>(i)] = std::sqrt(spec.lambda_at(i + 1));

    par::for_each_path(N, workers, [&](std::int64_t path) {
        rng::NormalStream zs(seed, static_cast<std::uint64_t>(path), ou::stream::kTheta);
        std::vector<double> coords(static_cast<std::size_t>(n));
        for (std::int64_t i = 0; i < n; ++i)
            coords[static_cast<std::size_t>(i)] = sqrt_lambda[static_cast<std::size_t>(i)] * zs.next();
        const basis::GridField f = table.synthesize_field(coords.data());
        double* slot = samples.data() + entries * static_cast<std::size_t>(path);
        std::size_t w = 0;
        for (std::size_t p = 0; p < P; ++p)
            for (std::size_t q = 0; q < P; ++q)
                for (int a = 1; a <= d; ++a)
                    for (int b = 1; b <= d; ++b)
                        slot[w++] = 2.0 * f.at(node_ids[p], a) * f.at(node_ids[q], b);
    });

    TensorPointEstimate out;
    out.nodes = node_ids;
    out.d = d;
    out.mean.resize(entries);
    out.se.resize(entries);
    for (std::size_t e = 0; e < entries; ++e) {
        par::RunningStat stat;
        for (std::int64_t path = 0; path < N; ++path)
            stat.add(samples[entries * static_cast<std::size_t>(path) + e]);
        out.mean[e] = stat.mean;
        out.se[e] = stat.stderr_mean();
    }
    return out;
}

namespace detail {

// Integral of |bilinear patch| with corners (f00,f01,f10,f11) over a cell of
// area `area`. Bilinear extrema sit at corners, so a same-sign cell is exact;
// mixed-sign cells subdivide recursively.
inline double abs_bilinear_cell(double f00, double f01, double f10, double f11, double area,
                                int depth) {
    const bool nonneg = f00 >= 0 && f01 >= 0 && f10 >= 0 && f11 >= 0;
    const bool nonpos = f00 <= 0 && f01 <= 0 && f10 <= 0 && f11 <= 0;
    if (nonneg || nonpos || depth <= 0)
        return area * 0.25 * (std::fabs(f00) + std::fabs(f01) + std::fabs(f10) + std::fabs(f11));
    const double fm0 = 0.5 * (f00 + f10);
    const double fm1 = 0.5 * (f01 + f11);
    const double f0m = 0.5 * (f00 + f01);
    const double f1m = 0.5 * (f10 + f11);
    const double fmm = 0.25 * (f00 + f01 + f10 + f11);
    const double qa = 0.25 * area;
    return abs_bilinear_cell(f00, f0m, fm0, fmm, qa, depth - 1) +
           abs_bilinear_cell(f0m, f01, fmm, fm1, qa, depth - 1) +
           abs_bilinear_cell(fm0, fmm, f10, f1m, qa, depth - 1) +
           abs_bilinear_cell(fmm, fm1, f1m, f11, qa, depth - 1);
}

} // namespace detail

// Projective-tensor norm of the kernel: int int sum_{a,b} |K_ab(u,v)| du dv,
// exact for the piecewise-bilinear interpolant up to the subdivision depth on
// sign-changing cells.
inline double pi_norm_l1(const TensorKernel& ker, int subdivide_depth = 12) {
    const std::int64_t top = std::int64_t{1} << ker.grid.depth;
    const double h = ker.grid.step();
    double total = 0.0;
    for (int a = 1; a <= ker.d; ++a)
        for (int b = 1; b <= ker.d; ++b)
            for (std::int64_t qu = 0; qu < top; ++qu)
                for (std::int64_t qv = 0; qv < top; ++qv)
                    total += detail::abs_bilinear_cell(
                        ker.at(qu, qv, a, b), ker.at(qu, qv + 1, a, b),
                        ker.at(qu + 1, qv, a, b), ker.at(qu + 1, qv + 1, a, b), h * h,
                        subdivide_depth);
    return total;
}

} // namespace ouqv::qv
