#pragma once

// Counter-based RNG (Philox4x32-10) with inverse-CDF standard normals.
//
// Streams are keyed by (seed, path_id, stream_id). Distinct keys give
// statistically independent streams; identical keys give bit-identical
// sequences on every platform. Each normal consumes exactly one 64-bit
// uniform, so stream alignment never depends on the values drawn.

#include <array>
#include <cmath>
#include <cstdint>

namespace ouqv::rng {

namespace detail {

struct Philox4x32State {
    std::array<std::uint32_t, 4> counter{};
    std::array<std::uint32_t, 2> key{};
};

inline std::uint32_t mulhi32(std::uint32_t a, std::uint32_t b) {
    return static_cast<std::uint32_t>(
        (static_cast<std::uint64_t>(a) * static_cast<std::uint64_t>(b)) >> 32);
}

inline std::array<std::uint32_t, 4> philox4x32_10(Philox4x32State s) {
    constexpr std::uint32_t M0 = 0xD2511F53u;
    constexpr std::uint32_t M1 = 0xCD9E8D57u;
    constexpr std::uint32_t W0 = 0x9E3779B9u;
    constexpr std::uint32_t W1 = 0xBB67AE85u;
    auto c = s.counter;
    auto k = s.key;
    for (int round = 0; round < 10; ++round) {
        const std::uint32_t hi0 = mulhi32(M0, c[0]);
        const std::uint32_t lo0 = M0 * c[0];
        const std::uint32_t hi1 = mulhi32(M1, c[2]);
        const std::uint32_t lo1 = M1 * c[2];
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
        k[0] += W0;
        k[1] += W1;
    }
    return c;
}

// AS241 (Wichura): inverse of the standard normal CDF, double precision.
inline double inverse_normal_cdf(double p) {
    const double q = p - 0.5;
    if (std::fabs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                     6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
                   1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
                 1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
               (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                     3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
                   5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
                 4.2313330701600911252e1) * r + 1.0);
    }
    double r = (q < 0.0) ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double x;
    if (r <= 5.0) {
        r -= 1.6;
        x = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                  2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
              4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
            (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                  1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
              2.05319162663775882187e0) * r + 1.0);
    } else {
        r -= 5.0;
        x = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                  1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
              5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
            (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                  1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
              5.99832206555887937690e-1) * r + 1.0);
    }
    return (q < 0.0) ? -x : x;
}

} // namespace detail

// A deterministic stream of standard normal variates.
class NormalStream {
public:
    NormalStream(std::uint64_t seed, std::uint64_t path_id, std::uint64_t stream_id)
        : seed_(seed), path_(path_id), stream_(stream_id) {}

    double next() {
        if (cache_pos_ >= 2) refill();
        return cache_[cache_pos_++];
    }

    // One uniform draw in (0,1); consumes one 64-bit block slot, same as next().
    double next_uniform() {
        if (cache_pos_ >= 2) refill_uniform();
        else uniformize_cache();
        return cache_[cache_pos_++];
    }

private:
    void refill() {
        const auto u = block();
        cache_[0] = detail::inverse_normal_cdf(to_open_unit(u[0], u[1]));
        cache_[1] = detail::inverse_normal_cdf(to_open_unit(u[2], u[3]));
        cache_pos_ = 0;
        uniform_cache_ = false;
    }

    void refill_uniform() {
        const auto u = block();
        cache_[0] = to_open_unit(u[0], u[1]);
        cache_[1] = to_open_unit(u[2], u[3]);
        cache_pos_ = 0;
        uniform_cache_ = true;
    }

    // next_uniform after next within the same block: rebuild pending values.
    void uniformize_cache() {
        if (uniform_cache_) return;
        --block_;
        const auto u = block();
        cache_[0] = to_open_unit(u[0], u[1]);
        cache_[1] = to_open_unit(u[2], u[3]);
        uniform_cache_ = true;
    }

    std::array<std::uint32_t, 4> block() {
        detail::Philox4x32State s;
        s.key = {static_cast<std::uint32_t>(seed_ ^ (stream_ << 1)),
                 static_cast<std::uint32_t>((seed_ >> 32) ^ (stream_ >> 31))};
        s.counter = {static_cast<std::uint32_t>(block_),
                     static_cast<std::uint32_t>(block_ >> 32),
                     static_cast<std::uint32_t>(path_),
                     static_cast<std::uint32_t>(path_ >> 32)};
        ++block_;
        return detail::philox4x32_10(s);
    }

    static double to_open_unit(std::uint32_t lo, std::uint32_t hi) {
        const std::uint64_t u = (static_cast<std::uint64_t>(hi) << 32) | lo;
        return (static_cast<double>(u >> 11) + 0.5) * 0x1.0p-53;
    }

    std::uint64_t seed_;
    std::uint64_t path_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    std::array<double, 2> cache_{};
    int cache_pos_ = 2;
    bool uniform_cache_ = false;
};

} // namespace ouqv::rng
