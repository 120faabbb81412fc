#pragma once

// Mehler semigroup cross-check, Dirichlet-form evaluation on cylindrical
// functions, generator-limit verification, cylindrical Ito residuals, and
// finite-dimensional approximation exactness.
//
// Under Wiener measure the pairings <S_i, gamma> are iid N(0,1), so every
// nu-integral is computed in coordinates; Brownian paths are never simulated.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ouqv/cylindrical.hpp"
#include "ouqv/ou_field.hpp"
#include "ouqv/parallel.hpp"
#include "ouqv/quadrature.hpp"
#include "ouqv/rng.hpp"
#include "ouqv/spectrum.hpp"

namespace ouqv::ou::stream {
inline constexpr std::uint64_t kMehler = 4;
inline constexpr std::uint64_t kGenerator = 5;
inline constexpr std::uint64_t kFindim = 6;
} // namespace ouqv::ou::stream

namespace ouqv::sg {

struct Estimate {
    double value = 0.0;
    double se = 0.0;
};

// Contraction coefficients and noise scales of the transition at time t.
struct MehlerSample {
    double t = 0.0;
    std::vector<double> contraction; // e^{-lambda_i t}
    std::vector<double> noise_scale; // sqrt(1 - e^{-2 lambda_i t})

    MehlerSample(const spectrum::SpectrumSpec& spec, int k, double t_) : t(t_) {
        if (t_ < 0.0) throw std::invalid_argument("MehlerSample: t must be >= 0");
        contraction.resize(static_cast<std::size_t>(k));
        noise_scale.resize(static_cast<std::size_t>(k));
        for (int i = 1; i <= k; ++i) {
            const double q = std::exp(-spec.lambda_at(i) * t_);
            contraction[static_cast<std::size_t>(i - 1)] = q;
            noise_scale[static_cast<std::size_t>(i - 1)] = std::sqrt(1.0 - q * q);
        }
    }
};

// MC average of f over y_i = G_i(0) e^{-lambda_i t} + sqrt(1-e^{-2 lambda_i t}) xi_i,
// i.e. int F(T_t X_0 + y) mu_t(dy). t = 0 short-circuits to F(X_0).
inline Estimate mehler_expectation(const cyl::CylindricalFn& F, const std::vector<double>& initials,
                                   const spectrum::SpectrumSpec& spec, double t, std::int64_t N,
                                   std::uint64_t seed, int workers) {
    std::vector<double> x0(static_cast<std::size_t>(F.k), 0.0);
    for (int i = 0; i < F.k && static_cast<std::size_t>(i) < initials.size(); ++i)
        x0[static_cast<std::size_t>(i)] = initials[static_cast<std::size_t>(i)];
    if (t == 0.0) return {F.f(0.0, x0.data()), 0.0};
    const MehlerSample ms(spec, F.k, t);
    std::vector<double> samples(static_cast<std::size_t>(N));
    par::for_each_path(N, workers, [&](std::int64_t p) {
        rng::NormalStream zs(seed, static_cast<std::uint64_t>(p), ou::stream::kMehler);
        std::vector<double> y(static_cast<std::size_t>(F.k));
        for (int i = 0; i < F.k; ++i)
            y[static_cast<std::size_t>(i)] = ms.contraction[static_cast<std::size_t>(i)] * x0[static_cast<std::size_t>(i)] +
                                             ms.noise_scale[static_cast<std::size_t>(i)] * zs.next();
        samples[static_cast<std::size_t>(p)] = F.f(t, y.data());
    });
    par::RunningStat stat;
    for (double v : samples) stat.add(v);
    return {stat.mean, stat.stderr_mean()};
}

// Same expectation via the path simulator; must agree with mehler_expectation
// within joint error.
inline Estimate pathwise_expectation(const cyl::CylindricalFn& F, const std::vector<double>& initials,
                                     const spectrum::SpectrumSpec& spec, double t, std::int64_t N,
                                     std::uint64_t seed, int workers) {
    std::vector<double> x0(static_cast<std::size_t>(F.k), 0.0);
    for (int i = 0; i < F.k && static_cast<std::size_t>(i) < initials.size(); ++i)
        x0[static_cast<std::size_t>(i)] = initials[static_cast<std::size_t>(i)];
    if (t == 0.0) return {F.f(0.0, x0.data()), 0.0};
    const std::vector<double> times = {0.0, t};
    std::vector<double> samples(static_cast<std::size_t>(N));
    par::for_each_path(N, workers, [&](std::int64_t p) {
        const ou::FieldPath path = ou::simulate_ensemble(spec, F.k, x0, times, seed,
                                                         static_cast<std::uint64_t>(p));
        samples[static_cast<std::size_t>(p)] = F.f(t, path.row(1));
    });
    par::RunningStat stat;
    for (double v : samples) stat.add(v);
    return {stat.mean, stat.stderr_mean()};
}

struct FormValue {
    double value = 0.0;
    std::string mode; // "quadrature" | "mc"
};

namespace detail {

// E[g(X)] for X iid N(0,1)^k by tensorized Gauss-Hermite quadrature.
inline double gh_expectation(const quad::Rule& rule, int k,
                             const std::function<double(const double*)>& g) {
    const int order = static_cast<int>(rule.nodes.size());
    std::vector<int> pos(static_cast<std::size_t>(k), 0);
    std::vector<double> x(static_cast<std::size_t>(k));
    double total = 0.0;
    while (true) {
        double w = 1.0;
        for (int i = 0; i < k; ++i) {
            const int q = pos[static_cast<std::size_t>(i)];
            x[static_cast<std::size_t>(i)] = rule.nodes[static_cast<std::size_t>(q)];
            w *= rule.weights[static_cast<std::size_t>(q)];
        }
        total += w * g(x.data());
        int i = 0;
        for (; i < k; ++i) {
            if (++pos[static_cast<std::size_t>(i)] < order) break;
            pos[static_cast<std::size_t>(i)] = 0;
        }
        if (i == k) break;
    }
    return total;
}

inline constexpr int kGaussHermiteOrder = 32;

} // namespace detail

// E(F,H) = sum_{i<=k} lambda_i E[d_i f d_i h] under iid standard normal
// coordinates; tensorized Gauss-Hermite for k <= 4, MC otherwise.
inline FormValue dirichlet_form(const cyl::CylindricalFn& F, const cyl::CylindricalFn& H,
                                const spectrum::SpectrumSpec& spec, std::int64_t mc_N = 200000,
                                std::uint64_t mc_seed = 2718) {
    const int k = std::max(F.k, H.k);
    if (k < 1) throw std::invalid_argument("dirichlet_form: k must be >= 1");
    auto integrand = [&](const double* x) {
        double s = 0.0;
        for (int i = 1; i <= k; ++i) {
            const double dfi = i <= F.k ? F.df_dx(0.0, x, i) : 0.0;
            const double dhi = i <= H.k ? H.df_dx(0.0, x, i) : 0.0;
            s += spec.lambda_at(i) * dfi * dhi;
        }
        return s;
    };
    if (k <= 4) {
        const quad::Rule rule = quad::gauss_hermite_probabilist(detail::kGaussHermiteOrder);
        return {detail::gh_expectation(rule, k, integrand), "quadrature"};
    }
    rng::NormalStream zs(mc_seed, 0, ou::stream::kGenerator);
    par::RunningStat stat;
    std::vector<double> x(static_cast<std::size_t>(k));
    for (std::int64_t p = 0; p < mc_N; ++p) {
        for (int i = 0; i < k; ++i) x[static_cast<std::size_t>(i)] = zs.next();
        stat.add(integrand(x.data()));
    }
    return {stat.mean, "mc"};
}

struct GeneratorRow {
    double t = 0.0;
    double quotient = 0.0;
    double se = 0.0;
    double target = 0.0;
};

// quotient(t) = (1/t) E_nu[(F(X_0) - E_{X_0}[F(X_t)]) H(X_0)], outer X_0 with
// iid standard normal coordinates, inner conditional expectation by
// Gauss-Hermite per axis. Converges toward dirichlet_form(F,H) as t -> 0.
inline std::vector<GeneratorRow> generator_limit_check(const cyl::CylindricalFn& F,
                                                       const cyl::CylindricalFn& H,
                                                       const spectrum::SpectrumSpec& spec,
                                                       const std::vector<double>& t_list,
                                                       std::int64_t N, std::uint64_t seed,
                                                       int workers) {
    const int k = std::max(F.k, H.k);
    if (k > 4) throw std::invalid_argument("generator_limit_check: k must be <= 4");
    const double target = dirichlet_form(F, H, spec).value;
    const quad::Rule rule = quad::gauss_hermite_probabilist(detail::kGaussHermiteOrder);

    std::vector<GeneratorRow> rows;
    for (double t : t_list) {
        if (!(t > 0.0)) throw std::invalid_argument("generator_limit_check: t must be > 0");
        const MehlerSample ms(spec, k, t);
        std::vector<double> samples(static_cast<std::size_t>(N));
        par::for_each_path(N, workers, [&](std::int64_t p) {
            rng::NormalStream zs(seed, static_cast<std::uint64_t>(p), ou::stream::kGenerator);
            std::vector<double> x(static_cast<std::size_t>(k));
            for (int i = 0; i < k; ++i) x[static_cast<std::size_t>(i)] = zs.next();
            std::vector<double> y(static_cast<std::size_t>(k));
            const double inner = detail::gh_expectation(rule, k, [&](const double* xi) {
                for (int i = 0; i < k; ++i)
                    y[static_cast<std::size_t>(i)] =
                        ms.contraction[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)] +
                        ms.noise_scale[static_cast<std::size_t>(i)] * xi[i];
                return F.f(t, y.data());
            });
            samples[static_cast<std::size_t>(p)] =
                (F.f(0.0, x.data()) - inner) * H.f(0.0, x.data()) / t;
        });
        par::RunningStat stat;
        for (double v : samples) stat.add(v);
        rows.push_back({t, stat.mean, stat.stderr_mean(), target});
    }
    return rows;
}

// Discrete cylindrical Ito residual on a uniform grid with left-point sums:
//   F(T, X_T) - F(0, X_0) - sum_j d_s F h - sum_{i<=k} sum_j d_i f * DeltaG_i
//   - sum_{i<=k} lambda_i sum_j d2_i f * h
inline double ito_residual(const cyl::CylindricalFn& F, const ou::FieldPath& path,
                           const spectrum::SpectrumSpec& spec) {
    const std::int64_t K = path.step_count();
    if (K < 1) throw std::invalid_argument("ito_residual: path needs at least one step");
    if (path.n < F.k) throw std::invalid_argument("ito_residual: path has fewer coordinates than F");
    const double h = path.times[1] - path.times[0];
    for (std::int64_t j = 1; j <= K; ++j)
        if (std::fabs(path.times[static_cast<std::size_t>(j)] -
                      path.times[static_cast<std::size_t>(j - 1)] - h) > 1e-12 * std::max(1.0, h))
            throw std::invalid_argument("ito_residual: grid must be uniform");

    double residual = F.f(path.times.back(), path.row(K)) - F.f(path.times.front(), path.row(0));
    for (std::int64_t j = 0; j < K; ++j) {
        const double s = path.times[static_cast<std::size_t>(j)];
        const double* g = path.row(j);
        const double* gn = path.row(j + 1);
        residual -= F.df_ds(s, g) * h;
        for (int i = 1; i <= F.k; ++i) {
            residual -= F.df_dx(s, g, i) * (gn[i - 1] - g[i - 1]);
            residual -= spec.lambda_at(i) * F.d2f_dx2(s, g, i) * h;
        }
    }
    return residual;
}

struct ResidualStats {
    double mean = 0.0;
    double se = 0.0;
    double rms = 0.0;
};

inline ResidualStats ito_residual_stats(const cyl::CylindricalFn& F,
                                        const spectrum::SpectrumSpec& spec,
                                        const std::vector<double>& initials, double T, double h,
                                        std::int64_t N, std::uint64_t seed, int workers) {
    const std::int64_t K = static_cast<std::int64_t>(std::llround(T / h));
    if (K < 1 || std::fabs(K * h - T) > 1e-9)
        throw std::invalid_argument("ito_residual_stats: h must divide T");
    std::vector<double> times(static_cast<std::size_t>(K) + 1);
    for (std::int64_t j = 0; j <= K; ++j) times[static_cast<std::size_t>(j)] = h * static_cast<double>(j);
    times.back() = T;
    std::vector<double> samples(static_cast<std::size_t>(N));
    par::for_each_path(N, workers, [&](std::int64_t p) {
        const ou::FieldPath path = ou::simulate_ensemble(spec, F.k, initials, times, seed,
                                                         static_cast<std::uint64_t>(p));
        samples[static_cast<std::size_t>(p)] = ito_residual(F, path, spec);
    });
    par::RunningStat stat;
    double sq = 0.0;
    for (double v : samples) {
        stat.add(v);
        sq += v * v;
    }
    return {stat.mean, stat.stderr_mean(), std::sqrt(sq / static_cast<double>(N))};
}

struct FindimRow {
    std::int64_t n = 0;
    double value = 0.0;
    double se = 0.0;
};

// E[prod_m F_m(X^(n)(t_m))] by iterated exact transitions of the first
// min(n, k) coordinates. F_m depends on coordinates <= k only, so for n >= k
// the computation graph is literally the same for every n: values must be
// bit-identical. For n < k missing coordinates are frozen at zero.
inline std::vector<FindimRow> findim_exactness_check(
    const std::vector<cyl::CylindricalFn>& F_list, const std::vector<double>& t_list,
    const spectrum::SpectrumSpec& spec, int k, const std::vector<std::int64_t>& n_list,
    const std::vector<double>& initials, std::int64_t N, std::uint64_t seed, int workers) {
    if (F_list.size() != t_list.size())
        throw std::invalid_argument("findim_exactness_check: need one time per factor");
    for (const auto& F : F_list)
        if (F.k > k) throw std::invalid_argument("findim_exactness_check: factor exceeds k coordinates");
    for (std::size_t m = 1; m < t_list.size(); ++m)
        if (!(t_list[m] > t_list[m - 1]))
            throw std::invalid_argument("findim_exactness_check: times must be increasing");

    std::vector<FindimRow> rows;
    for (std::int64_t n : n_list) {
        const int nc = static_cast<int>(std::min<std::int64_t>(n, k));
        std::vector<double> samples(static_cast<std::size_t>(N));
        par::for_each_path(N, workers, [&](std::int64_t p) {
            rng::NormalStream zs(seed, static_cast<std::uint64_t>(p), ou::stream::kFindim);
            std::vector<double> g(static_cast<std::size_t>(k), 0.0);
            for (int i = 0; i < nc && static_cast<std::size_t>(i) < initials.size(); ++i)
                g[static_cast<std::size_t>(i)] = initials[static_cast<std::size_t>(i)];
            double prod = 1.0;
            double t_prev = 0.0;
            for (std::size_t m = 0; m < t_list.size(); ++m) {
                const double u = t_list[m] - t_prev;
                if (u > 0.0)
                    for (int i = 0; i < nc; ++i)
                        g[static_cast<std::size_t>(i)] =
                            ou::ou_step(g[static_cast<std::size_t>(i)], spec.lambda_at(i + 1), u, zs.next());
                prod *= F_list[m].f(t_list[m], g.data());
                t_prev = t_list[m];
            }
            samples[static_cast<std::size_t>(p)] = prod;
        });
        par::RunningStat stat;
        for (double v : samples) stat.add(v);
        rows.push_back({n, stat.mean, stat.stderr_mean()});
    }
    return rows;
}

} // namespace ouqv::sg
