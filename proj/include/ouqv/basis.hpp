#pragma once

// Haar system, Schauder (tent) functions, cylindrical pairings, and the two
// path-space norms (componentwise sup and summed L1) on dyadic grids.
//
// Index convention: global index i = d*(r-1) + j with coordinate j in [1,d].
// Haar index r = 1 is the constant function; r = 2^m + k (k in [1,2^m]) is the
// level-m step function supported on [(k-1)/2^m, k/2^m).

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ouqv::basis {

inline constexpr int kRootLevel = -1; // sentinel for r = 1

struct BasisIndex {
    std::int64_t i = 1; // global index, >= 1
    std::int64_t r = 1; // Haar index, >= 1
    int j = 1;          // coordinate, 1..d
    int level = kRootLevel;
    std::int64_t offset = 0; // k in [1, 2^level] when level >= 0
};

inline BasisIndex decompose_index(std::int64_t i, int d) {
    if (i < 1) throw std::invalid_argument("decompose_index: i must be >= 1");
    if (d < 1) throw std::invalid_argument("decompose_index: d must be >= 1");
    BasisIndex idx;
    idx.i = i;
    idx.r = (i - 1) / d + 1;
    idx.j = static_cast<int>((i - 1) % d) + 1;
    if (idx.r == 1) {
        idx.level = kRootLevel;
        idx.offset = 0;
    } else {
        int m = 0;
        while ((std::int64_t{2} << m) <= idx.r - 1) ++m; // 2^m <= r-1 < 2^{m+1}
        idx.level = m;
        idx.offset = idx.r - (std::int64_t{1} << m);
    }
    return idx;
}

inline std::int64_t compose_index(const BasisIndex& idx, int d) {
    return d * (idx.r - 1) + idx.j;
}

// Haar function H_r(t), t in [0,1).
inline double haar_eval(std::int64_t r, double t) {
    if (!(t >= 0.0 && t < 1.0))
        throw std::invalid_argument("haar_eval: t must be in [0,1)");
    if (r < 1) throw std::invalid_argument("haar_eval: r must be >= 1");
    if (r == 1) return 1.0;
    int m = 0;
    while ((std::int64_t{2} << m) <= r - 1) ++m;
    const std::int64_t k = r - (std::int64_t{1} << m);
    const double scale = std::ldexp(1.0, m + 1); // 2^{m+1}
    const double lo = (2.0 * k - 2.0) / scale;
    const double mid = (2.0 * k - 1.0) / scale;
    const double hi = (2.0 * k) / scale;
    const double amp = std::exp2(0.5 * m);
    if (t >= lo && t < mid) return amp;
    if (t >= mid && t < hi) return -amp;
    return 0.0;
}

// Scalar Schauder profile: S-value of the active coordinate at s in [0,1].
// For r = 1 this is s; otherwise the tent on [(k-1)/2^m, k/2^m] with peak
// 2^{-(m+2)/2}.
inline double schauder_profile(const BasisIndex& idx, double s) {
    if (!(s >= 0.0 && s <= 1.0))
        throw std::invalid_argument("schauder_profile: s must be in [0,1]");
    if (idx.level == kRootLevel) return s;
    const int m = idx.level;
    const std::int64_t k = idx.offset;
    const double cell = std::ldexp(1.0, -m); // 2^{-m}
    const double lo = (k - 1) * cell;
    const double mid = lo + 0.5 * cell;
    const double hi = k * cell;
    if (s <= lo || s >= hi) return 0.0;
    const double slope = std::exp2(0.5 * m); // integral of +-2^{m/2}
    if (s < mid) return slope * (s - lo);
    return slope * (hi - s);
}

// Schauder function as a d-vector: value in coordinate j, zero elsewhere.
inline std::vector<double> schauder_eval(const BasisIndex& idx, double s, int d) {
    std::vector<double> out(static_cast<std::size_t>(d), 0.0);
    out[static_cast<std::size_t>(idx.j - 1)] = schauder_profile(idx, s);
    return out;
}

struct DyadicGrid {
    int depth = 1; // L >= 1; nodes s_q = q * 2^-L, q = 0..2^L

    explicit DyadicGrid(int L) : depth(L) {
        if (L < 1) throw std::invalid_argument("DyadicGrid: depth must be >= 1");
        if (L > 30) throw std::invalid_argument("DyadicGrid: depth too large");
    }
    std::int64_t node_count() const { return (std::int64_t{1} << depth) + 1; }
    double node(std::int64_t q) const { return std::ldexp(static_cast<double>(q), -depth); }
    double step() const { return std::ldexp(1.0, -depth); }
};

// Grid-sampled R^d-valued field on [0,1]; values stored node-major.
struct GridField {
    DyadicGrid grid;
    int d = 1;
    std::vector<double> values; // values[q * d + (j-1)]

    GridField(DyadicGrid g, int dim)
        : grid(g), d(dim),
          values(static_cast<std::size_t>(g.node_count()) * dim, 0.0) {
        if (dim < 1) throw std::invalid_argument("GridField: d must be >= 1");
    }
    double& at(std::int64_t q, int j) { return values[static_cast<std::size_t>(q) * d + (j - 1)]; }
    double at(std::int64_t q, int j) const {
        return values[static_cast<std::size_t>(q) * d + (j - 1)];
    }
};

// Sample S_i on a grid. Requires depth >= level+1 so breakpoints are nodes.
inline GridField schauder_field(const BasisIndex& idx, const DyadicGrid& grid, int d) {
    if (idx.level != kRootLevel && grid.depth < idx.level + 1)
        throw std::invalid_argument("schauder_field: grid depth must be >= level+1");
    GridField f(grid, d);
    for (std::int64_t q = 0; q <= (std::int64_t{1} << grid.depth); ++q)
        f.at(q, idx.j) = schauder_profile(idx, grid.node(q));
    return f;
}

// Cylindrical pairing <S_i, gamma> for piecewise-linear gamma on the grid:
// 2c*gamma_j(s2) - c*gamma_j(s1) - c*gamma_j(s3) with c = 2^{m/2}, and
// gamma_j(1) for r = 1.
inline double schauder_pairing(const BasisIndex& idx, const GridField& gamma) {
    if (idx.j > gamma.d)
        throw std::invalid_argument("schauder_pairing: coordinate exceeds field dimension");
    const std::int64_t top = std::int64_t{1} << gamma.grid.depth;
    if (idx.level == kRootLevel) return gamma.at(top, idx.j);
    const int m = idx.level;
    if (gamma.grid.depth < m + 1)
        throw std::invalid_argument("schauder_pairing: grid depth " +
                                    std::to_string(gamma.grid.depth) +
                                    " insufficient, need >= " + std::to_string(m + 1));
    const std::int64_t k = idx.offset;
    // support points as node indices at depth m+1, scaled to grid depth
    const std::int64_t shift = gamma.grid.depth - (m + 1);
    const std::int64_t q1 = (2 * (k - 1)) << shift;
    const std::int64_t q2 = (2 * k - 1) << shift;
    const std::int64_t q3 = (2 * k) << shift;
    const double c = std::exp2(0.5 * m);
    return 2.0 * c * gamma.at(q2, idx.j) - c * gamma.at(q1, idx.j) - c * gamma.at(q3, idx.j);
}

enum class NormKind { SupNorm, L1Norm };

inline const char* norm_kind_name(NormKind k) {
    return k == NormKind::SupNorm ? "sup" : "l1";
}

// Sup over grid nodes and coordinates (exact for fields that are piecewise
// linear with breakpoints on the grid).
inline double sup_norm(const GridField& f) {
    double best = 0.0;
    for (double v : f.values) best = std::max(best, std::fabs(v));
    return best;
}

// Exact integral of |piecewise-linear interpolant| per coordinate, summed.
// Sign-change roots inside a cell are inserted analytically.
inline double l1_norm(const GridField& f) {
    const double h = f.grid.step();
    double total = 0.0;
    const std::int64_t top = std::int64_t{1} << f.grid.depth;
    for (int j = 1; j <= f.d; ++j) {
        for (std::int64_t q = 0; q < top; ++q) {
            const double a = f.at(q, j);
            const double b = f.at(q + 1, j);
            if ((a >= 0.0 && b >= 0.0) || (a <= 0.0 && b <= 0.0)) {
                total += 0.5 * h * (std::fabs(a) + std::fabs(b));
            } else {
                // root at fraction u = a / (a - b) inside the cell
                const double u = a / (a - b);
                total += 0.5 * h * (std::fabs(a) * u + std::fabs(b) * (1.0 - u));
            }
        }
    }
    return total;
}

inline double norm(const GridField& f, NormKind kind) {
    return kind == NormKind::SupNorm ? sup_norm(f) : l1_norm(f);
}

// L1 norm of S_i: 1/2 for r = 1, else tent area 2^{-(3m+4)/2}.
inline double schauder_l1(const BasisIndex& idx) {
    if (idx.level == kRootLevel) return 0.5;
    return std::exp2(-0.5 * (3.0 * idx.level + 4.0));
}

// Sup norm of S_i: 1 for r = 1, else peak 2^{-(m+2)/2}.
inline double schauder_sup(const BasisIndex& idx) {
    if (idx.level == kRootLevel) return 1.0;
    return std::exp2(-0.5 * (idx.level + 2.0));
}

// Truncation bookkeeping: level M covers Haar indices r <= 2^{M+1}, i.e.
// global indices i <= d * 2^{M+1}.
inline std::int64_t truncation_count(int M, int d) {
    if (M < 0) throw std::invalid_argument("truncation_count: M must be >= 0");
    return static_cast<std::int64_t>(d) * (std::int64_t{1} << (M + 1));
}

// Sparse synthesis table: for each grid node, the basis indices with nonzero
// value there (at most one tent per (level, coordinate) plus the root ramp).
struct SynthTable {
    int d = 1;
    int M = 0;
    DyadicGrid grid;
    // per node: list of (global index - 1, coordinate j - 1, S value)
    struct Entry {
        std::int32_t i0;
        std::int32_t j0;
        double value;
    };
    std::vector<std::vector<Entry>> node_entries;

    SynthTable(int M_, int d_, const DyadicGrid& g) : d(d_), M(M_), grid(g), node_entries() {
        if (g.depth < M_ + 1)
            throw std::invalid_argument("SynthTable: grid depth must be >= M+1");
        const std::int64_t n = truncation_count(M_, d_);
        node_entries.resize(static_cast<std::size_t>(g.node_count()));
        for (std::int64_t i = 1; i <= n; ++i) {
            const BasisIndex idx = decompose_index(i, d_);
            for (std::int64_t q = 0; q < g.node_count(); ++q) {
                const double v = schauder_profile(idx, g.node(q));
                if (v != 0.0)
                    node_entries[static_cast<std::size_t>(q)].push_back(
                        {static_cast<std::int32_t>(i - 1),
                         static_cast<std::int32_t>(idx.j - 1), v});
            }
        }
    }

    // X(s_q) from coordinates: out must hold node_count()*d doubles.
    void synthesize(const double* coords, double* out) const {
        const std::size_t nodes = node_entries.size();
        for (std::size_t q = 0; q < nodes; ++q)
            for (int j = 0; j < d; ++j) out[q * d + j] = 0.0;
        for (std::size_t q = 0; q < nodes; ++q)
            for (const Entry& e : node_entries[q])
                out[q * d + e.j0] += coords[e.i0] * e.value;
    }

    GridField synthesize_field(const double* coords) const {
        GridField f(grid, d);
        synthesize(coords, f.values.data());
        return f;
    }

    // Norm of the synthesized field without materializing a GridField.
    double coord_norm(const double* coords, NormKind kind, std::vector<double>& scratch) const {
        scratch.resize(node_entries.size() * static_cast<std::size_t>(d));
        synthesize(coords, scratch.data());
        if (kind == NormKind::SupNorm) {
            double best = 0.0;
            for (double v : scratch) best = std::max(best, std::fabs(v));
            return best;
        }
        const double h = grid.step();
        const std::int64_t top = std::int64_t{1} << grid.depth;
        double total = 0.0;
        for (int j = 0; j < d; ++j) {
            for (std::int64_t q = 0; q < top; ++q) {
                const double a = scratch[static_cast<std::size_t>(q) * d + j];
                const double b = scratch[static_cast<std::size_t>(q + 1) * d + j];
                if ((a >= 0.0 && b >= 0.0) || (a <= 0.0 && b <= 0.0)) {
                    total += 0.5 * h * (std::fabs(a) + std::fabs(b));
                } else {
                    const double u = a / (a - b);
                    total += 0.5 * h * (std::fabs(a) * u + std::fabs(b) * (1.0 - u));
                }
            }
        }
        return total;
    }
};

} // namespace ouqv::basis
