#pragma once

// Extreme-value machinery for the running maximum of an OU coordinate over
// [0,T]: the von Mises tail integral Fbar, norming constants c_n, d_n, Gumbel
// convergence diagnostics, and moment bounds for maxima.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "ouqv/parallel.hpp"
#include "ouqv/quadrature.hpp"
#include "ouqv/rng.hpp"
#include "ouqv/spectrum.hpp"

namespace ouqv::ou::stream {
inline constexpr std::uint64_t kExtremes = 7;
inline constexpr std::uint64_t kGaussMax = 8;
} // namespace ouqv::ou::stream

namespace ouqv::evt {

// Tail model for max_{t in [0,T]} G(lambda t) started at 0, through the
// time-change s = e^{2 lambda t} - 1.
struct TailModel {
    double lambda = 1.0;
    double T = 1.0;
    double S = 0.0; // e^{2 lambda T} - 1
    int quad_panels = 2048;

    TailModel(double lambda_, double T_, int panels = 2048)
        : lambda(lambda_), T(T_), quad_panels(panels) {
        if (lambda_ < 1.0) throw std::invalid_argument("TailModel: lambda must be >= 1");
        if (!(T_ > 0.0)) throw std::invalid_argument("TailModel: T must be > 0");
        if (panels < 8) throw std::invalid_argument("TailModel: too few quadrature panels");
        S = std::expm1(2.0 * lambda_ * T_);
    }
};

namespace detail {

// Integrates f(s) over (0, S] through the substitution s = e^y - 1; the
// integrand concentrates near s = S and vanishes super-polynomially at 0.
inline double tail_integral(const TailModel& model,
                            const std::function<double(double)>& f_of_s, int panels) {
    static thread_local quad::Rule rule = quad::gauss_legendre(16);
    const double y_hi = std::log1p(model.S); // = 2 lambda T
    return quad::composite_gl(
        [&](double y) {
            const double s = std::expm1(y);
            return f_of_s(s) * (s + 1.0); // ds = e^y dy
        },
        0.0, y_hi, panels, rule);
}

} // namespace detail

// Fbar(x) = int_0^S (1/2s) x c phi(x c) ds + Phibar(x c_S), c = sqrt((s+1)/s).
inline double tail_Fbar(const TailModel& model, double x, int panels = 0) {
    if (!(x > 0.0)) throw std::invalid_argument("tail_Fbar: x must be > 0");
    if (panels <= 0) panels = model.quad_panels;
    const double cS = std::sqrt((model.S + 1.0) / model.S);
    const double integral = detail::tail_integral(
        model,
        [&](double s) {
            const double c = std::sqrt((s + 1.0) / s);
            return (0.5 / s) * x * c * quad::normal_pdf(x * c);
        },
        panels);
    return integral + quad::normal_sf(x * cS);
}

// d/dx of tail_Fbar: int_0^S (1/2s) c phi(xc)(1 - x^2 c^2) ds - c_S phi(x c_S).
inline double tail_Fbar_prime(const TailModel& model, double x, int panels = 0) {
    if (!(x > 0.0)) throw std::invalid_argument("tail_Fbar_prime: x must be > 0");
    if (panels <= 0) panels = model.quad_panels;
    const double cS = std::sqrt((model.S + 1.0) / model.S);
    const double integral = detail::tail_integral(
        model,
        [&](double s) {
            const double c = std::sqrt((s + 1.0) / s);
            const double xc = x * c;
            return (0.5 / s) * c * quad::normal_pdf(xc) * (1.0 - xc * xc);
        },
        panels);
    return integral - cS * quad::normal_pdf(x * cS);
}

struct NormingConstants {
    std::int64_t n = 0;
    double c_n = 0.0;
    double d_n = 0.0;
};

// d_n solves Fbar(d_n) = 1/n (bisection on the strictly decreasing tail);
// c_n = Fbar(d_n) / F'(d_n) with F' = -Fbar'.
inline NormingConstants norming_constants(const TailModel& model, std::int64_t n) {
    if (n < 2) throw std::invalid_argument("norming_constants: n must be >= 2");
    const double target = 1.0 / static_cast<double>(n);
    double lo = 1e-6, hi = 4.0;
    while (tail_Fbar(model, hi) > target) {
        hi *= 1.5;
        if (hi > 50.0) throw std::runtime_error("norming_constants: bracketing failed (x > 50)");
    }
    while (tail_Fbar(model, lo) < target) {
        lo *= 0.5;
        if (lo < 1e-12) throw std::runtime_error("norming_constants: bracketing failed near 0");
    }
    // bisection to the relative residual tolerance on Fbar
    double f_mid = 0.0, mid = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        mid = 0.5 * (lo + hi);
        f_mid = tail_Fbar(model, mid);
        if (std::fabs(f_mid - target) < 1e-10 * target) break;
        if (f_mid > target)
            lo = mid;
        else
            hi = mid;
    }
    NormingConstants out;
    out.n = n;
    out.d_n = mid;
    out.c_n = tail_Fbar(model, mid) / (-tail_Fbar_prime(model, mid));
    return out;
}

inline double gumbel_cdf(double x) { return std::exp(-std::exp(-x)); }

struct GumbelReport {
    std::int64_t n = 0;
    std::int64_t N = 0;
    NormingConstants norming;
    double ks_distance = 0.0;
    double median_normalized = 0.0;
};

// Simulates N draws of M^(n) = max over n independent zero-start OU paths of
// the running maximum on a grid of `grid_steps` exact-transition steps, and
// reports the KS distance of (M^(n) - d_n)/c_n against the standard Gumbel.
inline GumbelReport gumbel_convergence_check(const TailModel& model, std::int64_t n,
                                             std::int64_t N, std::uint64_t seed, int workers,
                                             std::int64_t grid_steps = 4096) {
    if (n < 2 || N < 2) throw std::invalid_argument("gumbel_convergence_check: need n, N >= 2");
    const NormingConstants nc = norming_constants(model, n);
    const double h = model.T / static_cast<double>(grid_steps);
    const double q = std::exp(-model.lambda * h);
    const double sd = std::sqrt(1.0 - q * q);

    std::vector<double> maxima(static_cast<std::size_t>(N));
    par::for_each_path(N, workers, [&](std::int64_t b) {
        double best = 0.0;
        for (std::int64_t path = 0; path < n; ++path) {
            rng::NormalStream zs(seed, static_cast<std::uint64_t>(b * n + path),
                                 ou::stream::kExtremes);
            double g = 0.0;
            for (std::int64_t j = 0; j < grid_steps; ++j) {
                g = g * q + sd * zs.next();
                if (g > best) best = g;
            }
        }
        maxima[static_cast<std::size_t>(b)] = (best - nc.d_n) / nc.c_n;
    });

    std::sort(maxima.begin(), maxima.end());
    double ks = 0.0;
    for (std::int64_t b = 0; b < N; ++b) {
        const double F = gumbel_cdf(maxima[static_cast<std::size_t>(b)]);
        const double lo = static_cast<double>(b) / static_cast<double>(N);
        const double hi = static_cast<double>(b + 1) / static_cast<double>(N);
        ks = std::max({ks, std::fabs(F - lo), std::fabs(F - hi)});
    }
    GumbelReport rep;
    rep.n = n;
    rep.N = N;
    rep.norming = nc;
    rep.ks_distance = ks;
    rep.median_normalized = 0.5 * (maxima[static_cast<std::size_t>((N - 1) / 2)] +
                                   maxima[static_cast<std::size_t>(N / 2)]);
    return rep;
}

struct MomentEstimate {
    double value = 0.0;
    double se = 0.0;
    double bound_shape = 0.0; // (ln lambda_{d 2^{m+1}})^{k/2} + m^{k/2}
};

// k-th moment of the max over level-m indices d2^m < i <= d2^{m+1} and
// t in [0,T] of the zero-drift coordinate G_i(lambda_i t), G_i(0) = 0.
inline MomentEstimate max_moment_estimate(const spectrum::SpectrumSpec& spec, int m, double T,
                                          int k, std::int64_t N, std::uint64_t seed, int workers,
                                          std::int64_t grid_steps = 4096) {
    if (!spec.appendix_admissible())
        throw std::invalid_argument("max_moment_estimate: requires lambda_1 >= 1");
    if (m < 0 || k < 1 || k > 4)
        throw std::invalid_argument("max_moment_estimate: need m >= 0 and k in 1..4");
    const std::int64_t d = spec.d();
    const std::int64_t lo = d << m;
    const std::int64_t hi = d << (m + 1);
    const double h = T / static_cast<double>(grid_steps);

    std::vector<double> qs(static_cast<std::size_t>(hi - lo)), sds(static_cast<std::size_t>(hi - lo));
    for (std::int64_t i = lo + 1; i <= hi; ++i) {
        const double q = std::exp(-spec.lambda_at(i) * h);
        qs[static_cast<std::size_t>(i - lo - 1)] = q;
        sds[static_cast<std::size_t>(i - lo - 1)] = std::sqrt(1.0 - q * q);
    }

    std::vector<double> samples(static_cast<std::size_t>(N));
    par::for_each_path(N, workers, [&](std::int64_t p) {
        rng::NormalStream zs(seed, static_cast<std::uint64_t>(p), ou::stream::kExtremes);
        double best = 0.0;
        std::vector<double> g(static_cast<std::size_t>(hi - lo), 0.0);
        for (std::int64_t j = 0; j < grid_steps; ++j)
            for (std::size_t c = 0; c < g.size(); ++c) {
                g[c] = g[c] * qs[c] + sds[c] * zs.next();
                if (g[c] > best) best = g[c];
            }
        samples[static_cast<std::size_t>(p)] = std::pow(best, k);
    });
    par::RunningStat stat;
    for (double v : samples) stat.add(v);
    MomentEstimate out;
    out.value = stat.mean;
    out.se = stat.stderr_mean();
    out.bound_shape = std::pow(std::log(spec.lambda_at(hi)), 0.5 * k) +
                      std::pow(static_cast<double>(m), 0.5 * k);
    return out;
}

struct GaussMaxEstimate {
    double value = 0.0;
    double se = 0.0;
    double ratio = 0.0; // value / (ln n)^{k/2}
};

// E[max_{i<=n} |xi_i|^k] for iid standard normals, over N batches.
inline GaussMaxEstimate gaussian_max_moment(std::int64_t n, int k, std::int64_t N,
                                            std::uint64_t seed, int workers) {
    if (n < 2 || k < 1) throw std::invalid_argument("gaussian_max_moment: need n >= 2, k >= 1");
    std::vector<double> samples(static_cast<std::size_t>(N));
    par::for_each_path(N, workers, [&](std::int64_t p) {
        rng::NormalStream zs(seed, static_cast<std::uint64_t>(p), ou::stream::kGaussMax);
        double best = 0.0;
        for (std::int64_t i = 0; i < n; ++i) best = std::max(best, std::fabs(zs.next()));
        samples[static_cast<std::size_t>(p)] = std::pow(best, k);
    });
    par::RunningStat stat;
    for (double v : samples) stat.add(v);
    GaussMaxEstimate out;
    out.value = stat.mean;
    out.se = stat.stderr_mean();
    out.ratio = stat.mean / std::pow(std::log(static_cast<double>(n)), 0.5 * k);
    return out;
}

} // namespace ouqv::evt
