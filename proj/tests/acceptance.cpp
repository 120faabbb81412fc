// Acceptance gate: every release-blocking criterion at its pinned tolerance,
// one pass/fail line each. Reference setup: d=1, lambda_i = i^{1/4}, M=6
// (128 basis functions), grid depth 8, T=1, zero initials, fixed seed.
//
// Exit status 0 iff all criteria pass.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ouqv/basis.hpp"
#include "ouqv/config.hpp"
#include "ouqv/cylindrical.hpp"
#include "ouqv/extremes.hpp"
#include "ouqv/ou_field.hpp"
#include "ouqv/parallel.hpp"
#include "ouqv/quadvar.hpp"
#include "ouqv/rng.hpp"
#include "ouqv/runner.hpp"
#include "ouqv/semigroup.hpp"
#include "ouqv/spectrum.hpp"

using namespace ouqv;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 20240817;
constexpr int kM = 6;
constexpr int kL = 8;
constexpr double kT = 1.0;
int g_workers = 1;

struct Reference {
    spectrum::SpectrumSpec spec = spectrum::SpectrumSpec::power_law(1.0, 0.25, 1);
    basis::DyadicGrid grid{kL};
    basis::SynthTable table{kM, 1, basis::DyadicGrid(kL)};
    std::int64_t n = basis::truncation_count(kM, 1);

    qv::PathEnsemble ensemble(const std::vector<double>& times, std::int64_t n_paths) const {
        qv::PathEnsemble e;
        e.spec = &spec;
        e.n = n;
        e.times = times;
        e.seed = kSeed;
        e.n_paths = n_paths;
        e.workers = g_workers;
        return e;
    }
};

std::vector<double> uniform_grid(double T, std::int64_t cells) {
    std::vector<double> t(static_cast<std::size_t>(cells) + 1);
    for (std::int64_t j = 0; j <= cells; ++j)
        t[static_cast<std::size_t>(j)] = T * static_cast<double>(j) / static_cast<double>(cells);
    return t;
}

int g_failures = 0;

bool report(int id, const char* name, bool ok, const std::string& detail) {
    std::printf("criterion %2d %-28s %s  %s\n", id, name, ok ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
    return ok;
}

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), pattern, a, b, c);
    return buf;
}

// 1. Haar orthonormality and Schauder coordinate recovery at 1e-12.
void criterion_basis(const Reference& ref) {
    double worst_ortho = 0.0;
    const int depth = kM + 2; // resolves every breakpoint of r <= 128
    const double h = std::ldexp(1.0, -depth);
    for (std::int64_t r = 1; r <= ref.n; ++r)
        for (std::int64_t rp = r; rp <= ref.n; ++rp) {
            double acc = 0.0;
            for (std::int64_t c = 0; c < (std::int64_t{1} << depth); ++c)
                acc += h * basis::haar_eval(r, (c + 0.5) * h) * basis::haar_eval(rp, (c + 0.5) * h);
            worst_ortho = std::max(worst_ortho, std::fabs(acc - (r == rp ? 1.0 : 0.0)));
        }

    rng::NormalStream zs(kSeed, 0, 99);
    std::vector<double> coeff(static_cast<std::size_t>(ref.n));
    for (auto& c : coeff) c = zs.next();
    const basis::GridField f = ref.table.synthesize_field(coeff.data());
    double worst_rec = 0.0;
    for (std::int64_t i = 1; i <= ref.n; ++i) {
        const double got = basis::schauder_pairing(basis::decompose_index(i, 1), f);
        worst_rec = std::max(worst_rec, std::fabs(got - coeff[static_cast<std::size_t>(i - 1)]));
    }
    report(1, "basis exactness", worst_ortho <= 1e-12 && worst_rec <= 1e-12,
           fmt("ortho err %.2e, recovery err %.2e (tol 1e-12)", worst_ortho, worst_rec));
}

// 2. One-step transition moments over 1e5 paths at 10 (i, t) pairs.
void criterion_ou_law(const Reference& ref) {
    const std::int64_t N = 100000;
    const std::int64_t idx[10] = {1, 2, 5, 9, 17, 33, 64, 100, 127, 128};
    const double ts[10] = {0.05, 0.9, 0.33, 0.6, 0.15, 1.0, 0.45, 0.08, 0.7, 0.25};
    double worst_mean_sig = 0.0, worst_var_sig = 0.0;
    for (int c = 0; c < 10; ++c) {
        const double lambda = ref.spec.lambda_at(idx[c]);
        const double g0 = c % 2 == 0 ? 0.0 : 1.5;
        const double q = std::exp(-lambda * ts[c]);
        const double want_mean = g0 * q;
        const double want_var = 1.0 - q * q;
        par::RunningStat stat;
        rng::NormalStream zs(kSeed + static_cast<std::uint64_t>(c), 0, 0);
        for (std::int64_t p = 0; p < N; ++p)
            stat.add(ou::ou_step(g0, lambda, ts[c], zs.next()));
        const double mean_sig = std::fabs(stat.mean - want_mean) /
                                (std::sqrt(stat.variance()) / std::sqrt(static_cast<double>(N)));
        const double var_sig = std::fabs(stat.variance() - want_var) /
                               (want_var * std::sqrt(2.0 / static_cast<double>(N)));
        worst_mean_sig = std::max(worst_mean_sig, mean_sig);
        worst_var_sig = std::max(worst_var_sig, var_sig);
    }
    report(2, "transition law", worst_mean_sig <= 4.0 && worst_var_sig <= 4.0,
           fmt("worst mean dev %.2f sigma, var dev %.2f sigma (tol 4)", worst_mean_sig,
               worst_var_sig));
}

// 3. Partition QV terminal value and slope against the theta oracles, both norms.
void criterion_scalar_qv(const Reference& ref) {
    const qv::Partition part = qv::Partition::dyadic(kT, 10);
    const auto ens = ref.ensemble(part.points, 500);

    bool ok = true;
    std::string detail;
    for (basis::NormKind kind : {basis::NormKind::SupNorm, basis::NormKind::L1Norm}) {
        const qv::ThetaEstimate theta =
            kind == basis::NormKind::L1Norm
                ? qv::theta_l1_quadrature(ref.spec, kM, kM + 2)
                : qv::theta_mc(ref.spec, kind, kM, 100000, kSeed + 1000, ref.table, g_workers);
        const qv::QVEstimate est = qv::scalar_qv_partition(ens, part, kind, ref.table);
        const double target = kT * theta.value;
        const double combined = std::sqrt(est.terminal_se() * est.terminal_se() +
                                          kT * kT * theta.se * theta.se);
        const double term_sig = std::fabs(est.terminal() - target) / combined;
        const double slope_rel = std::fabs(est.slope_vs_time() - theta.value) / theta.value;
        ok = ok && term_sig <= 3.0 && slope_rel <= 0.05;
        detail += fmt(kind == basis::NormKind::SupNorm ? "sup: %.2f sigma, slope %.1f%%; "
                                                       : "l1: %.2f sigma, slope %.1f%%",
                      term_sig, 100.0 * slope_rel);
    }
    report(3, "partition QV", ok, detail + " (tol 3 sigma, 5%)");
}

// 4. Regularized QV sup deviation shrinks in delta and ends below 10% of T theta.
void criterion_regularized_qv(const Reference& ref) {
    const auto ens = ref.ensemble(uniform_grid(kT, 1024), 500);
    const qv::ThetaEstimate theta =
        qv::theta_mc(ref.spec, basis::NormKind::SupNorm, kM, 100000, kSeed + 1000, ref.table,
                     g_workers);
    std::vector<double> sup_dev;
    for (double delta : {std::ldexp(1.0, -6), std::ldexp(1.0, -8), std::ldexp(1.0, -10)}) {
        const qv::QVEstimate est = qv::regularized_qv(ens, delta, basis::NormKind::SupNorm, ref.table);
        double dev = 0.0;
        for (std::size_t j = 0; j < est.times.size(); ++j)
            dev = std::max(dev, std::fabs(est.mean[j] - est.times[j] * theta.value));
        sup_dev.push_back(dev);
    }
    const bool monotone = sup_dev[1] <= 1.25 * sup_dev[0] && sup_dev[2] <= 1.25 * sup_dev[1];
    const double final_frac = sup_dev[2] / (kT * theta.value);
    report(4, "regularized QV", monotone && final_frac < 0.10,
           fmt("sup dev %.3f -> %.3f -> %.3f, final %.1f%% of target", sup_dev[0], sup_dev[1],
               sup_dev[2]) +
               fmt(" (%.1f%%, tol 10%%)", 100.0 * final_frac));
}

// 5. Tensor QV kernel against the closed form, globally in L1 and pointwise.
void criterion_tensor_qv(const Reference& ref) {
    const basis::DyadicGrid kgrid(kM + 1);
    const basis::SynthTable ktable(kM, 1, kgrid);
    const double delta = std::ldexp(1.0, -8);
    auto ens = ref.ensemble(uniform_grid(kT, 256), 2000);

    const qv::TensorKernel mc = qv::tensor_qv(ens, delta, ktable);
    const qv::TensorKernel closed = qv::theta_tensor_closed_form(ref.spec, kM, kgrid);
    const double dist = qv::pi_norm_l1(qv::kernel_difference(mc, closed));
    const double scale = qv::pi_norm_l1(closed);
    const double rel = dist / scale;

    const std::vector<std::int64_t> nodes = {16, 48, 64, 96, 128};
    const qv::TensorPointEstimate pt =
        qv::theta_tensor_mc(ref.spec, kM, ktable, nodes, 40000, kSeed + 2000, g_workers);
    double worst_sig = 0.0;
    for (std::size_t p = 0; p < nodes.size(); ++p)
        for (std::size_t q = 0; q < nodes.size(); ++q) {
            const std::size_t s = pt.slot(p, q, 1, 1);
            const double want = closed.at(nodes[p], nodes[q], 1, 1);
            worst_sig = std::max(worst_sig, std::fabs(pt.mean[s] - want) / pt.se[s]);
        }
    report(5, "tensor QV", rel < 0.05 && worst_sig <= 4.0,
           fmt("L1 distance %.2f%% (tol 5%%), worst point %.2f sigma (tol 4)", 100.0 * rel,
               worst_sig));
}

// 6. The drift and correction parts carry almost no quadratic variation.
void criterion_zero_qv_parts(const Reference& ref) {
    const qv::ThetaEstimate theta =
        qv::theta_mc(ref.spec, basis::NormKind::SupNorm, kM, 100000, kSeed + 1000, ref.table,
                     g_workers);
    double qv_at[2];
    int slot = 0;
    for (int depth : {10, 11}) {
        const qv::Partition part = qv::Partition::dyadic(kT, depth);
        const auto ens = ref.ensemble(part.points, 300);
        const qv::QVEstimate est = qv::scalar_qv_partition(ens, part, basis::NormKind::SupNorm,
                                                           ref.table, qv::Component::DriftOnly);
        qv_at[slot++] = est.terminal();
    }
    const double frac = qv_at[0] / (kT * theta.value);
    const double factor = qv_at[0] / qv_at[1];
    report(6, "drift QV vanishes", frac < 0.01 && factor >= 1.6 && factor <= 2.4,
           fmt("QV(Z+A) = %.2f%% of target (tol 1%%), mesh-halving factor %.2f (tol [1.6,2.4])",
               100.0 * frac, factor));
}

// 7. Mehler vs pathwise expectations for the catalog functions.
void criterion_mehler(const Reference& ref) {
    double worst = 0.0;
    for (const std::string& name : {"linear", "quadratic", "sigmoid-product", "trig-poly"}) {
        const cyl::CylindricalFn F = cyl::catalog(name);
        for (double t : {0.1, 0.5, 1.0}) {
            const sg::Estimate a =
                sg::mehler_expectation(F, {}, ref.spec, t, 100000, kSeed, g_workers);
            const sg::Estimate b =
                sg::pathwise_expectation(F, {}, ref.spec, t, 100000, kSeed + 1, g_workers);
            const double joint = std::sqrt(a.se * a.se + b.se * b.se);
            worst = std::max(worst, std::fabs(a.value - b.value) / joint);
        }
    }
    report(7, "mehler cross-check", worst <= 3.0, fmt("worst gap %.2f sigma (tol 3)", worst));
}

// 8. Generator quotient for f = x1^2 converges to 4 lambda_1.
void criterion_generator(const Reference& ref) {
    const cyl::CylindricalFn F = cyl::catalog("quadratic");
    const auto rows = sg::generator_limit_check(F, F, ref.spec, {0.2, 0.1, 0.05, 0.025}, 400000,
                                                kSeed, g_workers);
    bool decreasing = true;
    double prev = 1e9;
    for (const auto& r : rows) {
        const double err = std::fabs(r.quotient - r.target);
        decreasing = decreasing && err < prev;
        prev = err;
    }
    const double final_rel = std::fabs(rows.back().quotient - rows.back().target) /
                             rows.back().target;
    report(8, "generator limit", decreasing && final_rel < 0.05,
           std::string(decreasing ? "error decreasing, " : "error NOT decreasing, ") +
               fmt("final %.2f%% (tol 5%%)", 100.0 * final_rel));
}

// 9. Finite-dimensional approximation: bit-identical above k, different below.
void criterion_findim(const Reference& ref) {
    const cyl::CylindricalFn F = cyl::catalog("sigmoid-product");
    const std::vector<cyl::CylindricalFn> F_list = {F, F};
    const auto rows = sg::findim_exactness_check(F_list, {0.5, 1.0}, ref.spec, F.k, {1, 2, 4, 8},
                                                 {}, 2000, kSeed, g_workers);
    const bool identical = rows[1].value == rows[2].value && rows[2].value == rows[3].value;
    const bool contrast = rows[0].value != rows[1].value;
    report(9, "finite-dim exactness", identical && contrast,
           fmt("n>=2 identical %g, n=1 differs %g", identical ? 1.0 : 0.0, contrast ? 1.0 : 0.0));
}

// 10. Ito residual for f = x1^2: centered mean, sqrt(h) rms scaling.
void criterion_ito(const Reference& ref) {
    const cyl::CylindricalFn F = cyl::catalog("quadratic");
    const double h = std::ldexp(1.0, -10);
    const sg::ResidualStats coarse =
        sg::ito_residual_stats(F, ref.spec, {}, kT, h, 10000, kSeed, g_workers);
    const sg::ResidualStats fine =
        sg::ito_residual_stats(F, ref.spec, {}, kT, 0.5 * h, 10000, kSeed, g_workers);
    const double mean_sig = std::fabs(coarse.mean) / coarse.se;
    const double ratio = coarse.rms / fine.rms;
    report(10, "ito residual", mean_sig <= 3.0 && ratio >= 1.1 && ratio <= 2.2,
           fmt("mean %.2f sigma (tol 3), rms ratio %.2f (tol [1.1,2.2])", mean_sig, ratio));
}

// 11. Fourth moment of increments scales like u^2 at t = 0 and t = 1.
void criterion_moment_scan(const Reference& ref) {
    const std::vector<double> u_list = {std::ldexp(1.0, -2), std::ldexp(1.0, -3),
                                        std::ldexp(1.0, -4), std::ldexp(1.0, -5),
                                        std::ldexp(1.0, -6)};
    bool ok = true;
    std::string detail;
    for (double t : {0.0, 1.0}) {
        const ou::MomentScan scan = ou::fourth_moment_scan(ref.spec, kM, {}, t, u_list, 4000,
                                                           kSeed, ref.table, g_workers);
        // Lower edge 1.7, not 1.8: at u = 2^-2 the top modes have lambda u ~ 0.84,
        // so increment variances are already saturating and the exact slope over
        // this window is ~1.79 at t = 0 even though the u -> 0 exponent is 2.
        ok = ok && scan.loglog_slope >= 1.7 && scan.loglog_slope <= 2.2;
        detail += fmt("t=%g: slope %.3f; ", t, scan.loglog_slope);
    }
    report(11, "increment moments", ok, detail + "(tol [1.7,2.2])");
}

// 12. Norming constants: exact inversion, stabilization, lambda envelopes.
void criterion_norming() {
    const std::vector<std::int64_t> n_grid = {100, 1000, 10000, 100000};
    bool residual_ok = true, envelope_ok = true;
    for (double lambda : {1.0, 4.0, 16.0}) {
        const evt::TailModel model(lambda, kT);
        for (std::int64_t n : n_grid) {
            const evt::NormingConstants nc = evt::norming_constants(model, n);
            residual_ok = residual_ok &&
                          std::fabs(evt::tail_Fbar(model, nc.d_n) * static_cast<double>(n) - 1.0) <
                              1e-9;
            const double root = std::sqrt(std::log(static_cast<double>(n)));
            const double dr = nc.d_n / root;
            const double cr = nc.c_n * root;
            envelope_ok = envelope_ok && dr > 0.5 && dr < 3.0 && cr > 0.1 && cr < 3.0;
        }
    }
    const evt::TailModel model(1.0, kT);
    auto spread = [](const std::vector<double>& v) {
        double lo = v[0], hi = v[0];
        for (double x : v) {
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
        return (hi - lo) / hi;
    };
    std::vector<double> dr, cr;
    for (std::int64_t n : n_grid) {
        const evt::NormingConstants nc = evt::norming_constants(model, n);
        dr.push_back(nc.d_n / std::sqrt(std::log(static_cast<double>(n))));
        cr.push_back(nc.c_n * std::sqrt(std::log(static_cast<double>(n))));
    }
    report(12, "norming constants", residual_ok && envelope_ok && spread(dr) < 0.1 && spread(cr) < 0.1,
           fmt("inversion ok %g, d_n spread %.1f%%, c_n spread %.1f%% (tol 10%%)",
               residual_ok && envelope_ok ? 1.0 : 0.0, 100.0 * spread(dr), 100.0 * spread(cr)));
}

// 13. KS distance to the Gumbel law decreases over n in {8, 64, 512}.
void criterion_gumbel() {
    const evt::TailModel model(1.0, kT);
    std::vector<double> ks;
    for (std::int64_t n : {8, 64, 512}) {
        const evt::GumbelReport rep =
            evt::gumbel_convergence_check(model, n, 5000, kSeed, g_workers, 4096);
        ks.push_back(rep.ks_distance);
    }
    const bool decreasing = ks[1] < ks[0] && ks[2] < ks[1];
    report(13, "gumbel convergence", decreasing,
           fmt("KS %.3f -> %.3f -> %.3f (must decrease)", ks[0], ks[1], ks[2]));
}

// 14. Max moments: level ratios bounded, gaussian max near sqrt(2 ln n).
void criterion_max_moments(const Reference& ref) {
    std::vector<double> ratios;
    for (int m = 1; m <= 6; ++m) {
        const evt::MomentEstimate est =
            evt::max_moment_estimate(ref.spec, m, kT, 2, 500, kSeed, g_workers);
        ratios.push_back(est.value / est.bound_shape);
    }
    double lo = ratios[0], hi = ratios[0];
    for (double r : ratios) {
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    const evt::GaussMaxEstimate g = evt::gaussian_max_moment(10000, 1, 2000, kSeed, g_workers);
    const double normalized = g.value / std::sqrt(2.0 * std::log(10000.0));
    report(14, "max-moment bounds", hi / lo < 4.0 && normalized >= 0.85 && normalized <= 1.15,
           fmt("level ratio max/min %.2f (tol 4), gauss ratio %.3f (tol [0.85,1.15])", hi / lo,
               normalized));
}

// 15. Every subcommand is bit-identical for 1 vs 8 workers.
void criterion_reproducibility() {
    const nlohmann::json j = {
        {"spectrum", {{"family", "power-law"}, {"a", 1.0}, {"alpha", 0.25}, {"d", 1}}},
        {"truncation_level", 2},
        {"grid_depth", 4},
        {"horizon", 1.0},
        {"step", 1.0 / 256},
        {"norm", "sup"},
        {"n_paths", 16},
        {"seed", 7},
        {"partition", {{"depth", 6}}},
        {"deltas", {1.0 / 32, 1.0 / 64}},
        {"n_list", {1, 2, 4}},
        {"appendix",
         {{"lambda", 1.0}, {"T", 1.0}, {"n_list", {4, 8}}, {"m_list", {1, 2}}, {"k", 2},
          {"x_list", {2.0, 3.0}}, {"gumbel_paths", 200}}},
    };
    cfg::ExperimentConfig c1 = cfg::parse_config(j);
    cfg::ExperimentConfig c8 = cfg::parse_config(j);
    c1.workers = 1;
    c8.workers = 8;

    const fs::path base = fs::temp_directory_path() / "ouqv_acceptance_repro";
    fs::remove_all(base);
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    };
    bool ok = true;
    std::string first_diff;
    for (const std::string& cmd : run::subcommands()) {
        const fs::path d1 = base / (cmd + "_w1");
        const fs::path d8 = base / (cmd + "_w8");
        run::run(cmd, c1, d1);
        run::run(cmd, c8, d8);
        for (const auto& entry : fs::directory_iterator(d1)) {
            if (slurp(entry.path()) != slurp(d8 / entry.path().filename())) {
                ok = false;
                if (first_diff.empty()) first_diff = cmd + "/" + entry.path().filename().string();
            }
        }
    }
    fs::remove_all(base);
    report(15, "reproducibility", ok,
           ok ? "all subcommand artifacts bit-identical for 1 vs 8 workers"
              : "first mismatch: " + first_diff);
}

} // namespace

int main(int argc, char** argv) {
    if (argc > 1) g_workers = std::max(1, std::atoi(argv[1]));
    const Reference ref;
    const auto t0 = std::chrono::steady_clock::now();
    criterion_basis(ref);
    criterion_ou_law(ref);
    criterion_scalar_qv(ref);
    criterion_regularized_qv(ref);
    criterion_tensor_qv(ref);
    criterion_zero_qv_parts(ref);
    criterion_mehler(ref);
    criterion_generator(ref);
    criterion_findim(ref);
    criterion_ito(ref);
    criterion_moment_scan(ref);
    criterion_norming();
    criterion_gumbel();
    criterion_max_moments(ref);
    criterion_reproducibility();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%d/15 criteria passed in %.0f s\n", 15 - g_failures, secs);
    return g_failures == 0 ? 0 : 1;
}
