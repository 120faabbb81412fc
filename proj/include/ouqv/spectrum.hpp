#pragma once

// Diffusion eigenvalue sequences lambda_i and the three summability
// conditions (closability, finite-dimensional approximation, quadratic
// variation) they must satisfy.

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ouqv::spectrum {

enum class Family { PowerLaw, LogLaw, Explicit };

// lambda_i = a * i^alpha (PowerLaw), a * ln(i+1)^p (LogLaw), or a stored list.
class SpectrumSpec {
public:
    static SpectrumSpec power_law(double a, double alpha, int d) {
        if (a <= 0.0) throw std::invalid_argument("SpectrumSpec: a must be > 0");
        if (alpha < 0.0) throw std::invalid_argument("SpectrumSpec: alpha must be >= 0");
        SpectrumSpec s(Family::PowerLaw, d);
        s.a_ = a;
        s.exponent_ = alpha;
        return s;
    }
    static SpectrumSpec log_law(double a, double p, int d) {
        if (a <= 0.0) throw std::invalid_argument("SpectrumSpec: a must be > 0");
        if (p <= 0.0) throw std::invalid_argument("SpectrumSpec: p must be > 0");
        SpectrumSpec s(Family::LogLaw, d);
        s.a_ = a;
        s.exponent_ = p;
        return s;
    }
    static SpectrumSpec explicit_list(std::vector<double> lambdas, int d) {
        SpectrumSpec s(Family::Explicit, d);
        double prev = 0.0;
        for (double v : lambdas) {
            if (v <= 0.0)
                throw std::invalid_argument("SpectrumSpec: eigenvalues must be > 0");
            if (v < prev)
                throw std::invalid_argument("SpectrumSpec: eigenvalues must be nondecreasing");
            prev = v;
        }
        s.values_ = std::move(lambdas);
        return s;
    }
    // Test-only: degenerate spectra (zeros allowed, monotonicity unchecked).
    static SpectrumSpec unchecked_explicit_for_tests(std::vector<double> lambdas, int d) {
        SpectrumSpec s(Family::Explicit, d);
        s.values_ = std::move(lambdas);
        return s;
    }

    Family family() const { return family_; }
    int d() const { return d_; }
    double a() const { return a_; }
    double exponent() const { return exponent_; }
    const std::vector<double>& explicit_values() const { return values_; }

    double lambda_at(std::int64_t i) const {
        if (i < 1) throw std::invalid_argument("lambda_at: i must be >= 1");
        switch (family_) {
        case Family::PowerLaw:
            return a_ * std::pow(static_cast<double>(i), exponent_);
        case Family::LogLaw:
            return a_ * std::pow(std::log(static_cast<double>(i) + 1.0), exponent_);
        case Family::Explicit:
            if (static_cast<std::size_t>(i) > values_.size())
                throw std::out_of_range("lambda_at: index " + std::to_string(i) +
                                        " beyond explicit spectrum of size " +
                                        std::to_string(values_.size()));
            return values_[static_cast<std::size_t>(i - 1)];
        }
        throw std::logic_error("lambda_at: unreachable");
    }

    // The extreme-value tail model needs lambda_1 >= 1.
    bool appendix_admissible() const { return lambda_at(1) >= 1.0; }

private:
    SpectrumSpec(Family f, int d) : family_(f), d_(d) {
        if (d < 1) throw std::invalid_argument("SpectrumSpec: d must be >= 1");
    }
    Family family_;
    int d_;
    double a_ = 1.0;
    double exponent_ = 0.0;
    std::vector<double> values_;
};

enum class ConditionId { Closability, Approx, Qv };

enum class Verdict { ConvergesAnalytically, DivergesAnalytically, NumericallyPlausible, Inconclusive };

struct ConditionReport {
    ConditionId condition;
    std::vector<double> partial_sums; // over M = 0..M_max
    Verdict verdict;
    double tail_estimate = 0.0; // geometric tail bound when NumericallyPlausible

    bool converges() const {
        return verdict == Verdict::ConvergesAnalytically ||
               verdict == Verdict::NumericallyPlausible;
    }
};

inline const char* verdict_name(Verdict v) {
    switch (v) {
    case Verdict::ConvergesAnalytically: return "ConvergesAnalytically";
    case Verdict::DivergesAnalytically: return "DivergesAnalytically";
    case Verdict::NumericallyPlausible: return "NumericallyPlausible";
    case Verdict::Inconclusive: return "Inconclusive";
    }
    return "?";
}

namespace detail {

// Numeric verdict heuristic: if the last 10 terms decay by a ratio < 0.95,
// report NumericallyPlausible with a geometric tail estimate.
inline void numeric_verdict(ConditionReport& rep, const std::vector<double>& terms) {
    rep.verdict = Verdict::Inconclusive;
    if (terms.size() < 11) return;
    double worst_ratio = 0.0;
    for (std::size_t k = terms.size() - 10; k < terms.size(); ++k) {
        if (terms[k - 1] <= 0.0) {
            worst_ratio = terms[k] > 0.0 ? 1.0 : 0.0;
            continue;
        }
        worst_ratio = std::max(worst_ratio, terms[k] / terms[k - 1]);
    }
    if (worst_ratio < 0.95) {
        rep.verdict = Verdict::NumericallyPlausible;
        rep.tail_estimate = terms.back() * worst_ratio / (1.0 - worst_ratio);
    }
}

inline double level_max_initial(const std::vector<double>& initials, int d, int m) {
    // max |G_i(0)| over d*2^m < i <= d*2^{m+1}; zero when no initials stored.
    if (initials.empty()) return 0.0;
    const std::int64_t lo = static_cast<std::int64_t>(d) << m;
    const std::int64_t hi = static_cast<std::int64_t>(d) << (m + 1);
    double best = 0.0;
    for (std::int64_t i = lo + 1; i <= hi; ++i) {
        if (static_cast<std::size_t>(i) > initials.size()) break;
        best = std::max(best, std::fabs(initials[static_cast<std::size_t>(i - 1)]));
    }
    return best;
}

} // namespace detail

// sum_m 2^{-m} * lambda_{d 2^m}
inline ConditionReport check_closability(const SpectrumSpec& spec, int M_max) {
    if (M_max < 1) throw std::invalid_argument("check_closability: M_max must be >= 1");
    ConditionReport rep;
    rep.condition = ConditionId::Closability;
    std::vector<double> terms;
    double sum = 0.0;
    for (int m = 0; m <= M_max; ++m) {
        const double term =
            std::exp2(-m) * spec.lambda_at(static_cast<std::int64_t>(spec.d()) << m);
        terms.push_back(term);
        sum += term;
        rep.partial_sums.push_back(sum);
    }
    switch (spec.family()) {
    case Family::PowerLaw:
        rep.verdict = spec.exponent() < 1.0 ? Verdict::ConvergesAnalytically
                                            : Verdict::DivergesAnalytically;
        break;
    case Family::LogLaw:
        rep.verdict = Verdict::ConvergesAnalytically;
        break;
    case Family::Explicit:
        detail::numeric_verdict(rep, terms);
        break;
    }
    return rep;
}

namespace detail {

inline ConditionReport check_level_sum(const SpectrumSpec& spec,
                                       const std::vector<double>& initials, int M_max,
                                       ConditionId id, bool upper_level) {
    ConditionReport rep;
    rep.condition = id;
    std::vector<double> terms;
    double sum = 0.0;
    for (int m = 0; m <= M_max; ++m) {
        const std::int64_t idx = static_cast<std::int64_t>(spec.d())
                                 << (upper_level ? m + 1 : m);
        const double term = std::exp2(-0.5 * m) * spec.lambda_at(idx) *
                            (level_max_initial(initials, spec.d(), m) +
                             std::sqrt(static_cast<double>(m)));
        terms.push_back(term);
        sum += term;
        rep.partial_sums.push_back(sum);
    }
    switch (spec.family()) {
    case Family::PowerLaw:
        rep.verdict = spec.exponent() < 0.5 ? Verdict::ConvergesAnalytically
                                            : Verdict::DivergesAnalytically;
        break;
    case Family::LogLaw:
        rep.verdict = Verdict::ConvergesAnalytically;
        break;
    case Family::Explicit:
        numeric_verdict(rep, terms);
        break;
    }
    return rep;
}

} // namespace detail

// sum_m 2^{-m/2} * lambda_{d 2^{m+1}} * (max level-m |G_i(0)| + sqrt(m))
inline ConditionReport check_qv_condition(const SpectrumSpec& spec,
                                          const std::vector<double>& initials, int M_max) {
    return detail::check_level_sum(spec, initials, M_max, ConditionId::Qv, true);
}

// Same with lambda_{d 2^m} in place of lambda_{d 2^{m+1}}.
inline ConditionReport check_approx_condition(const SpectrumSpec& spec,
                                              const std::vector<double>& initials,
                                              int M_max) {
    return detail::check_level_sum(spec, initials, M_max, ConditionId::Approx, false);
}

} // namespace ouqv::spectrum
