#pragma once

// Gauss-Legendre / Gauss-Hermite nodes and composite rules.

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

namespace ouqv::quad {

struct Rule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration on P_n.
inline Rule gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: order must be >= 1");
    Rule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (x * p0 - p1) / (x * x - 1.0);
            const double dx = p0 / pp;
            x -= dx;
            if (std::fabs(dx) < 1e-15) break;
        }
        r.nodes[i] = -x;
        r.nodes[n - 1 - i] = x;
        r.weights[i] = 2.0 / ((1.0 - x * x) * pp * pp);
        r.weights[n - 1 - i] = r.weights[i];
    }
    return r;
}

// Gauss-Hermite nodes/weights for weight e^{-x^2/2}/sqrt(2*pi), i.e.
// sum_i w_i f(x_i) approximates E[f(Z)], Z ~ N(0,1).
inline Rule gauss_hermite_probabilist(int n) {
    if (n < 1) throw std::invalid_argument("gauss_hermite: order must be >= 1");
    // Physicists' nodes for weight e^{-x^2}, then rescale by sqrt(2).
    Rule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    const double pim4 = 0.7511255444649425; // pi^{-1/4}
    const int m = (n + 1) / 2;
    double x = 0.0;
    for (int i = 0; i < m; ++i) {
        if (i == 0)
            x = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
        else if (i == 1)
            x -= 1.14 * std::pow(static_cast<double>(n), 0.426) / x;
        else if (i == 2)
            x = 1.86 * x - 0.86 * r.nodes[0];
        else if (i == 3)
            x = 1.91 * x - 0.91 * r.nodes[1];
        else
            x = 2.0 * x - r.nodes[i - 2];
        double pp = 0.0;
        for (int it = 0; it < 200; ++it) {
            double p0 = pim4, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = x * std::sqrt(2.0 / (j + 1.0)) * p1 -
                     std::sqrt(static_cast<double>(j) / (j + 1.0)) * p2;
            }
            pp = std::sqrt(2.0 * n) * p1;
            const double dx = p0 / pp;
            x -= dx;
            if (std::fabs(dx) < 1e-14) break;
        }
        r.nodes[i] = x; // store descending in first half, mirror below
        r.weights[i] = 2.0 / (pp * pp);
    }
    // Mirror and rescale to probabilists' convention.
    std::vector<double> nodes(n), weights(n);
    for (int i = 0; i < m; ++i) {
        nodes[i] = -r.nodes[i] * std::sqrt(2.0);
        nodes[n - 1 - i] = r.nodes[i] * std::sqrt(2.0);
        weights[i] = weights[n - 1 - i] = r.weights[i] / std::sqrt(M_PI);
    }
    if (n % 2 == 1) nodes[m - 1] = 0.0;
    return {nodes, weights};
}

// Composite Gauss-Legendre integral of f over [a,b] with `panels` equal panels.
inline double composite_gl(const std::function<double(double)>& f, double a, double b,
                           int panels, const Rule& rule) {
    const double h = (b - a) / panels;
    double total = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double mid = a + (p + 0.5) * h;
        double s = 0.0;
        for (std::size_t q = 0; q < rule.nodes.size(); ++q)
            s += rule.weights[q] * f(mid + 0.5 * h * rule.nodes[q]);
        total += 0.5 * h * s;
    }
    return total;
}

inline double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double normal_sf(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

} // namespace ouqv::quad
