#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "ouqv/extremes.hpp"
#include "ouqv/spectrum.hpp"

using namespace ouqv;

TEST_CASE("tail function is a decreasing probability with stable quadrature") {
    const evt::TailModel model(1.0, 1.0);
    double prev = 1.0;
    for (double x : {0.5, 1.0, 2.0, 3.0, 4.0}) {
        const double f = evt::tail_Fbar(model, x);
        CHECK(f > 0.0);
        CHECK(f < 1.0);
        CHECK(f < prev);
        prev = f;
        const double refined = evt::tail_Fbar(model, x, 2 * model.quad_panels);
        CHECK(std::fabs(f - refined) < 1e-8 * refined);
    }
    // the running maximum dominates the endpoint value
    const double cS = std::sqrt((model.S + 1.0) / model.S);
    for (double x : {1.0, 2.0, 3.0})
        CHECK(evt::tail_Fbar(model, x) > quad::normal_sf(x * cS));
    CHECK_THROWS(evt::tail_Fbar(model, 0.0));
    CHECK_THROWS(evt::TailModel(0.5, 1.0));
    CHECK_THROWS(evt::TailModel(1.0, -1.0));
}

TEST_CASE("tail derivative matches finite differences and stays negative") {
    for (double lambda : {1.0, 4.0}) {
        const evt::TailModel model(lambda, 1.0);
        for (double x : {0.8, 1.5, 2.5, 3.5}) {
            const double fp = evt::tail_Fbar_prime(model, x);
            CHECK(fp < 0.0);
            const double eps = 1e-5 * x;
            const double fd =
                (evt::tail_Fbar(model, x + eps) - evt::tail_Fbar(model, x - eps)) / (2.0 * eps);
            CHECK(fp == Catch::Approx(fd).epsilon(1e-6));
        }
    }
}

TEST_CASE("tail is gumbel-like: hazard-normalized spacing near 1 deep in the tail") {
    const evt::TailModel model(1.0, 1.0);
    // von Mises quotient Fbar(x + c(x) y) / Fbar(x) -> e^{-y}, c = Fbar / F'
    for (double x : {3.0, 4.0}) {
        const double f = evt::tail_Fbar(model, x);
        const double c = f / (-evt::tail_Fbar_prime(model, x));
        for (double y : {0.5, 1.0}) {
            const double quotient = evt::tail_Fbar(model, x + c * y) / f;
            CHECK(quotient == Catch::Approx(std::exp(-y)).epsilon(0.2));
        }
    }
}

TEST_CASE("norming constants invert the tail and stabilize") {
    const evt::TailModel model(1.0, 1.0);
    std::vector<double> d_ratio, c_ratio;
    double prev_d = 0.0;
    for (std::int64_t n : {100, 1000, 10000, 100000}) {
        const evt::NormingConstants nc = evt::norming_constants(model, n);
        CHECK(std::fabs(evt::tail_Fbar(model, nc.d_n) * static_cast<double>(n) - 1.0) < 1e-9);
        CHECK(nc.c_n > 0.0);
        CHECK(nc.d_n > prev_d); // quantiles increase with n
        prev_d = nc.d_n;
        const double root = std::sqrt(std::log(static_cast<double>(n)));
        d_ratio.push_back(nc.d_n / root);
        c_ratio.push_back(nc.c_n * root);
    }
    // d_n ~ sqrt(2 log n), c_n ~ 1 / d_n up to slowly varying factors
    for (std::size_t q = 0; q < d_ratio.size(); ++q) {
        CHECK(d_ratio[q] > 0.9);
        CHECK(d_ratio[q] < 2.1);
        CHECK(c_ratio[q] > 0.3);
        CHECK(c_ratio[q] < 1.6);
    }
    CHECK_THROWS(evt::norming_constants(model, 1));
}

TEST_CASE("normalized maxima approach the gumbel law") {
    const evt::TailModel model(1.0, 1.0);
    const std::int64_t N = 800;
    const evt::GumbelReport small = evt::gumbel_convergence_check(model, 4, N, 51, 1, 512);
    const evt::GumbelReport large = evt::gumbel_convergence_check(model, 64, N, 51, 1, 512);
    CHECK(large.ks_distance < small.ks_distance);
    // gumbel median is -ln ln 2 ~ 0.3665
    CHECK(std::fabs(large.median_normalized + std::log(std::log(2.0))) < 0.4);
    CHECK(large.ks_distance < 0.12);
}

TEST_CASE("gumbel reports are reproducible for a fixed seed") {
    const evt::TailModel model(1.0, 1.0);
    const evt::GumbelReport a = evt::gumbel_convergence_check(model, 8, 200, 5, 1, 256);
    const evt::GumbelReport b = evt::gumbel_convergence_check(model, 8, 200, 5, 3, 256);
    CHECK(a.ks_distance == b.ks_distance);
    CHECK(a.median_normalized == b.median_normalized);
}

TEST_CASE("level maxima moments stay within a constant of the bound shape") {
    const auto spec = spectrum::SpectrumSpec::power_law(1.0, 0.25, 1);
    std::vector<double> ratios;
    for (int m : {2, 4, 6}) {
        const evt::MomentEstimate est = evt::max_moment_estimate(spec, m, 1.0, 2, 300, 61, 1, 512);
        CHECK(est.value > 0.0);
        CHECK(est.bound_shape > 0.0);
        ratios.push_back(est.value / est.bound_shape);
    }
    for (double r : ratios) {
        CHECK(r > 0.05);
        CHECK(r < 20.0);
    }
    CHECK(ratios.back() / ratios.front() < 4.0);
    CHECK(ratios.front() / ratios.back() < 4.0);

    const auto bad = spectrum::SpectrumSpec::power_law(0.5, 0.25, 1);
    CHECK_THROWS(evt::max_moment_estimate(bad, 2, 1.0, 2, 10, 61, 1, 64));
    CHECK_THROWS(evt::max_moment_estimate(spec, 2, 1.0, 5, 10, 61, 1, 64));
}

TEST_CASE("gaussian maxima match the two-variable closed form and the growth rate") {
    // E[max(|xi_1|, |xi_2|)^2] = 1 + 2/pi
    const evt::GaussMaxEstimate pair = evt::gaussian_max_moment(2, 2, 200000, 71, 1);
    CHECK(std::fabs(pair.value - (1.0 + 2.0 / M_PI)) <= 3.0 * pair.se);

    // E[max_{i<=n} |xi_i|] / sqrt(2 ln n) settles near 1
    const evt::GaussMaxEstimate big = evt::gaussian_max_moment(20000, 1, 2000, 71, 1);
    const double normalized = big.value / std::sqrt(2.0 * std::log(20000.0));
    CHECK(normalized > 0.85);
    CHECK(normalized < 1.15);
    CHECK_THROWS(evt::gaussian_max_moment(1, 1, 10, 71, 1));
}
