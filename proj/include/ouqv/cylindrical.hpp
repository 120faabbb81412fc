#pragma once

// Cylindrical test functions F(gamma) = f(s; <S_1,gamma>, ..., <S_k,gamma>)
// with caller-supplied partial derivatives, validated against finite
// differences on registration, plus the built-in catalog.

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ouqv/rng.hpp"

namespace ouqv::cyl {

// Callbacks receive (s, x) with x pointing at the k coordinate values.
// Derivative callbacks take the coordinate index i in 1..k. All callbacks
// must be stateless; they are invoked concurrently.
struct CylindricalFn {
    std::string name;
    int k = 1;
    std::function<double(double, const double*)> f;
    std::function<double(double, const double*)> df_ds;
    std::function<double(double, const double*, int)> df_dx;
    std::function<double(double, const double*, int)> d2f_dx2;
    bool polynomial_growth = true;
};

namespace detail {

inline bool close_rel(double got, double want, double rel, double abs_floor) {
    return std::fabs(got - want) <= rel * std::fabs(want) + abs_floor;
}

} // namespace detail

// Checks the supplied partials against central finite differences of f at 20
// random points. Throws on disagreement beyond relative 1e-5.
inline void validate(const CylindricalFn& fn, std::uint64_t seed = 417) {
    if (fn.k < 1) throw std::invalid_argument("CylindricalFn: k must be >= 1");
    if (!fn.f || !fn.df_ds || !fn.df_dx || !fn.d2f_dx2)
        throw std::invalid_argument("CylindricalFn: all callbacks must be supplied");
    rng::NormalStream zs(seed, 0, 0);
    const double h1 = 6e-6;  // first-derivative step
    const double h2 = 1e-4;  // second-derivative step
    std::vector<double> x(static_cast<std::size_t>(fn.k));
    std::vector<double> xp(x), xm(x);
    for (int pt = 0; pt < 20; ++pt) {
        const double s = 0.5 + 0.5 * std::tanh(zs.next()); // in (0,1)
        for (int i = 0; i < fn.k; ++i) x[static_cast<std::size_t>(i)] = zs.next();
        const double fd_s = (fn.f(s + h1, x.data()) - fn.f(s - h1, x.data())) / (2.0 * h1);
        if (!detail::close_rel(fn.df_ds(s, x.data()), fd_s, 1e-5, 1e-7))
            throw std::invalid_argument("CylindricalFn '" + fn.name + "': df_ds mismatch");
        for (int i = 1; i <= fn.k; ++i) {
            xp = x;
            xm = x;
            xp[static_cast<std::size_t>(i - 1)] += h1;
            xm[static_cast<std::size_t>(i - 1)] -= h1;
            const double fd = (fn.f(s, xp.data()) - fn.f(s, xm.data())) / (2.0 * h1);
            if (!detail::close_rel(fn.df_dx(s, x.data(), i), fd, 1e-5, 1e-7))
                throw std::invalid_argument("CylindricalFn '" + fn.name + "': df_dx mismatch");
            xp[static_cast<std::size_t>(i - 1)] = x[static_cast<std::size_t>(i - 1)] + h2;
            xm[static_cast<std::size_t>(i - 1)] = x[static_cast<std::size_t>(i - 1)] - h2;
            const double fd2 = (fn.f(s, xp.data()) - 2.0 * fn.f(s, x.data()) + fn.f(s, xm.data())) /
                               (h2 * h2);
            if (!detail::close_rel(fn.d2f_dx2(s, x.data(), i), fd2, 1e-4, 1e-6))
                throw std::invalid_argument("CylindricalFn '" + fn.name + "': d2f_dx2 mismatch");
        }
    }
}

namespace detail {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

} // namespace detail

// Built-in catalog, addressable by name from the CLI:
//   linear          f(x1) = x1
//   quadratic       f(x1) = x1^2
//   sigmoid-product f(x1,x2) = sigmoid(x1) sigmoid(x2)
//   trig-poly       f(x1,x2) = sin x1 + cos(2 x2) + 0.25 x1 x2
//   time-linear     f(s; x1) = s x1
inline CylindricalFn catalog(const std::string& name) {
    CylindricalFn fn;
    fn.name = name;
    fn.df_ds = [](double, const double*) { return 0.0; };
    if (name == "linear") {
        fn.k = 1;
        fn.f = [](double, const double* x) { return x[0]; };
        fn.df_dx = [](double, const double*, int) { return 1.0; };
        fn.d2f_dx2 = [](double, const double*, int) { return 0.0; };
    } else if (name == "quadratic") {
        fn.k = 1;
        fn.f = [](double, const double* x) { return x[0] * x[0]; };
        fn.df_dx = [](double, const double* x, int) { return 2.0 * x[0]; };
        fn.d2f_dx2 = [](double, const double*, int) { return 2.0; };
    } else if (name == "sigmoid-product") {
        fn.k = 2;
        fn.f = [](double, const double* x) {
            return detail::sigmoid(x[0]) * detail::sigmoid(x[1]);
        };
        fn.df_dx = [](double, const double* x, int i) {
            const double si = detail::sigmoid(x[i - 1]);
            return si * (1.0 - si) * detail::sigmoid(x[2 - i]);
        };
        fn.d2f_dx2 = [](double, const double* x, int i) {
            const double si = detail::sigmoid(x[i - 1]);
            return si * (1.0 - si) * (1.0 - 2.0 * si) * detail::sigmoid(x[2 - i]);
        };
    } else if (name == "trig-poly") {
        fn.k = 2;
        fn.f = [](double, const double* x) {
            return std::sin(x[0]) + std::cos(2.0 * x[1]) + 0.25 * x[0] * x[1];
        };
        fn.df_dx = [](double, const double* x, int i) {
            return i == 1 ? std::cos(x[0]) + 0.25 * x[1]
                          : -2.0 * std::sin(2.0 * x[1]) + 0.25 * x[0];
        };
        fn.d2f_dx2 = [](double, const double* x, int i) {
            return i == 1 ? -std::sin(x[0]) : -4.0 * std::cos(2.0 * x[1]);
        };
    } else if (name == "time-linear") {
        fn.k = 1;
        fn.f = [](double s, const double* x) { return s * x[0]; };
        fn.df_ds = [](double, const double* x) { return x[0]; };
        fn.df_dx = [](double s, const double*, int) { return s; };
        fn.d2f_dx2 = [](double, const double*, int) { return 0.0; };
    } else {
        throw std::invalid_argument("catalog: unknown cylindrical function '" + name + "'");
    }
    validate(fn);
    return fn;
}

inline std::vector<std::string> catalog_names() {
    return {"linear", "quadratic", "sigmoid-product", "trig-poly", "time-linear"};
}

} // namespace ouqv::cyl
