#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "ouqv/quadrature.hpp"
#include "ouqv/rng.hpp"

using namespace ouqv;

TEST_CASE("identical keys reproduce the stream exactly") {
    rng::NormalStream a(123, 45, 6), b(123, 45, 6);
    for (int q = 0; q < 100000; ++q) CHECK(a.next() == b.next());
}

TEST_CASE("distinct keys decorrelate") {
    const int N = 100000;
    for (auto [p1, p2, s1, s2] : {std::array<std::uint64_t, 4>{0, 1, 0, 0},
                                  std::array<std::uint64_t, 4>{7, 7, 0, 1}}) {
        rng::NormalStream a(99, p1, s1), b(99, p2, s2);
        double sum = 0.0;
        for (int q = 0; q < N; ++q) sum += a.next() * b.next();
        CHECK(std::fabs(sum / N) < 4.0 / std::sqrt(static_cast<double>(N)));
    }
}

TEST_CASE("marginal law is standard normal (KS at 1%)") {
    const int N = 100000;
    std::vector<double> draws(N);
    rng::NormalStream zs(2024, 0, 0);
    for (auto& v : draws) v = zs.next();
    std::sort(draws.begin(), draws.end());
    double ks = 0.0;
    for (int q = 0; q < N; ++q) {
        const double F = quad::normal_cdf(draws[static_cast<std::size_t>(q)]);
        ks = std::max({ks, std::fabs(F - static_cast<double>(q) / N),
                       std::fabs(F - static_cast<double>(q + 1) / N)});
    }
    CHECK(ks < 1.628 / std::sqrt(static_cast<double>(N)));

    double mean = 0.0, var = 0.0;
    for (double v : draws) mean += v;
    mean /= N;
    for (double v : draws) var += (v - mean) * (v - mean);
    var /= N - 1;
    CHECK(std::fabs(mean) < 4.0 / std::sqrt(static_cast<double>(N)));
    CHECK(std::fabs(var - 1.0) < 4.0 * std::sqrt(2.0 / N));
}

TEST_CASE("normals are the inverse-CDF image of the uniform stream") {
    rng::NormalStream a(5, 5, 5), b(5, 5, 5);
    for (int q = 0; q < 1000; ++q) {
        const double u = a.next_uniform();
        const double z = b.next();
        CHECK(u > 0.0);
        CHECK(u < 1.0);
        CHECK(z == rng::detail::inverse_normal_cdf(u));
    }
}

TEST_CASE("interleaving uniform and normal draws stays aligned") {
    rng::NormalStream a(17, 2, 3), b(17, 2, 3);
    const double n1 = a.next();
    const double u2 = a.next_uniform();
    const double u1 = b.next_uniform();
    const double u2b = b.next_uniform();
    CHECK(n1 == rng::detail::inverse_normal_cdf(u1));
    CHECK(u2 == u2b);
    // both streams continue from the same position
    for (int q = 0; q < 10; ++q) CHECK(a.next() == b.next());
}

TEST_CASE("inverse normal CDF inverts the CDF") {
    for (double x : {-5.0, -2.0, -0.5, 0.0, 0.3, 1.7, 4.0}) {
        const double p = quad::normal_cdf(x);
        CHECK(rng::detail::inverse_normal_cdf(p) == Catch::Approx(x).margin(1e-9));
    }
}
