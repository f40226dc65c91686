#pragma once
// Closed-form Bernstein functions f(mu) = \int (1 - e^{-mu s}) nu(ds) for the
// supported Levy measures, their derivatives, exponential Levy moments and the
// normalized jump-size law of the subordinated Poisson process.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "subpois/errors.hpp"

namespace subpois {

enum class Family : std::uint8_t {
    Stable,    // f(mu) = mu^alpha
    Tempered,  // f(mu) = (mu + theta)^alpha - theta^alpha
    Gamma,     // f(mu) = log(1 + mu)
    DiracUnit, // nu = rate2 * delta_1, f(mu) = rate2 (1 - e^{-mu})
    Linear     // f(mu) = mu, the homogeneous Poisson process
};

inline std::string_view family_name(Family family) noexcept {
    switch (family) {
    case Family::Stable: return "stable";
    case Family::Tempered: return "tempered";
    case Family::Gamma: return "gamma";
    case Family::DiracUnit: return "dirac";
    case Family::Linear: return "linear";
    }
    return "unknown";
}

inline Family parse_family(std::string_view name) {
    if (name == "stable") return Family::Stable;
    if (name == "tempered") return Family::Tempered;
    if (name == "gamma") return Family::Gamma;
    if (name == "dirac" || name == "diracunit") return Family::DiracUnit;
    if (name == "linear") return Family::Linear;
    throw ParameterDomainError("unknown family '" + std::string(name) + "'");
}

// Validated descriptor of one closed Bernstein family. Parameters that a family
// does not use are stored as NaN.
class BernsteinSpec {
public:
    static BernsteinSpec stable(double alpha) {
        check_alpha(alpha);
        return BernsteinSpec(Family::Stable, alpha, nan(), nan());
    }

    static BernsteinSpec tempered(double alpha, double theta) {
        check_alpha(alpha);
        if (!(theta > 0.0) || !std::isfinite(theta))
            throw ParameterDomainError("tempered family needs theta > 0");
        return BernsteinSpec(Family::Tempered, alpha, theta, nan());
    }

    static BernsteinSpec gamma() { return BernsteinSpec(Family::Gamma, nan(), nan(), nan()); }

    static BernsteinSpec dirac_unit(double rate2) {
        if (!(rate2 > 0.0) || !std::isfinite(rate2))
            throw ParameterDomainError("dirac family needs rate2 > 0");
        return BernsteinSpec(Family::DiracUnit, nan(), nan(), rate2);
    }

    static BernsteinSpec linear() { return BernsteinSpec(Family::Linear, nan(), nan(), nan()); }

    Family family() const noexcept { return family_; }
    double alpha() const noexcept { return alpha_; }
    double theta() const noexcept { return theta_; }
    double rate2() const noexcept { return rate2_; }

    // Stable, Tempered and Gamma have infinite Levy mass.
    bool infinite_activity() const noexcept {
        return family_ == Family::Stable || family_ == Family::Tempered ||
               family_ == Family::Gamma;
    }

    std::string describe() const {
        std::string out(family_name(family_));
        switch (family_) {
        case Family::Stable: out += "(alpha=" + fmt(alpha_) + ")"; break;
        case Family::Tempered:
            out += "(alpha=" + fmt(alpha_) + ", theta=" + fmt(theta_) + ")";
            break;
        case Family::DiracUnit: out += "(rate2=" + fmt(rate2_) + ")"; break;
        default: break;
        }
        return out;
    }

private:
    BernsteinSpec(Family family, double alpha, double theta, double rate2)
        : family_(family), alpha_(alpha), theta_(theta), rate2_(rate2) {}

    static double nan() { return std::numeric_limits<double>::quiet_NaN(); }

    static void check_alpha(double alpha) {
        if (!(alpha > 0.0 && alpha < 1.0))
            throw ParameterDomainError("alpha must lie in (0,1)");
    }

    static std::string fmt(double x) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%g", x);
        return buf;
    }

    Family family_;
    double alpha_;
    double theta_;
    double rate2_;
};

// Spec plus the rate lambda of the base Poisson process.
struct ProcessParams {
    BernsteinSpec spec;
    double lambda;

    ProcessParams(BernsteinSpec s, double lam) : spec(s), lambda(lam) {
        if (!(lam > 0.0) || !std::isfinite(lam))
            throw ParameterDomainError("lambda must be > 0");
    }
};

// log|value| with an explicit sign; sign == 0 means the value is exactly zero.
struct SignedLog {
    double log_abs = -std::numeric_limits<double>::infinity();
    int sign = 0;

    double value() const noexcept { return sign == 0 ? 0.0 : sign * std::exp(log_abs); }
};

inline double eval_f(const BernsteinSpec& spec, double mu) {
    if (!(mu >= 0.0)) throw DomainError("eval_f needs mu >= 0");
    if (mu == 0.0) return 0.0;
    switch (spec.family()) {
    case Family::Stable: return std::pow(mu, spec.alpha());
    case Family::Tempered: {
        const double th = spec.theta();
        return std::pow(th, spec.alpha()) * std::expm1(spec.alpha() * std::log1p(mu / th));
    }
    case Family::Gamma: return std::log1p(mu);
    case Family::DiracUnit: return -spec.rate2() * std::expm1(-mu);
    case Family::Linear: return mu;
    }
    return 0.0;
}

namespace detail {

inline int alternating_sign(int m) noexcept { return (m % 2 == 1) ? 1 : -1; } // (-1)^{m+1}

// log |alpha (alpha-1) ... (alpha-m+1)| = log alpha + sum_{j<m} log(j - alpha).
// Past a few hundred terms the sum is replaced by lgamma(m - alpha) - lgamma(1 - alpha);
// both lose about the same absolute precision there and the loop would be O(m).
inline double log_abs_falling(double alpha, int m) {
    if (m > 256 && alpha < 1.0) return std::log(alpha) + std::lgamma(m - alpha) - std::lgamma(1.0 - alpha);
    double acc = std::log(alpha);
    for (int j = 1; j < m; ++j) acc += std::log(static_cast<double>(j) - alpha);
    return acc;
}

// f^{(m)}(mu) for m >= 1 and mu >= 0; at mu = 0 the stable family diverges and
// reports +inf magnitude.
inline SignedLog log_f_derivative(const BernsteinSpec& spec, int m, double mu) {
    SignedLog out;
    switch (spec.family()) {
    case Family::Stable:
    case Family::Tempered: {
        const double base = spec.family() == Family::Stable ? mu : mu + spec.theta();
        out.sign = alternating_sign(m);
        if (base == 0.0) {
            out.log_abs = std::numeric_limits<double>::infinity();
        } else {
            out.log_abs = log_abs_falling(spec.alpha(), m) + (spec.alpha() - m) * std::log(base);
        }
        return out;
    }
    case Family::Gamma:
        out.sign = alternating_sign(m);
        out.log_abs = std::lgamma(static_cast<double>(m)) - m * std::log1p(mu);
        return out;
    case Family::DiracUnit:
        out.sign = alternating_sign(m);
        out.log_abs = std::log(spec.rate2()) - mu;
        return out;
    case Family::Linear:
        if (m == 1) {
            out.sign = 1;
            out.log_abs = 0.0;
        }
        return out;
    }
    return out;
}

} // namespace detail

// f^{(m)}(mu), m >= 1, mu > 0.
inline double eval_f_derivative(const BernsteinSpec& spec, int m, double mu) {
    if (m < 1) throw ContractError("eval_f_derivative needs m >= 1; use eval_f for m = 0");
    if (!(mu > 0.0)) throw DomainError("eval_f_derivative needs mu > 0");
    return detail::log_f_derivative(spec, m, mu).value();
}

// \int_0^inf e^{-lambda s} s^m nu(ds) = (-1)^{m+1} f^{(m)}(lambda). The Linear
// family has a drift and no Levy mass, so it returns 0 for every m >= 1.
inline double levy_exp_moment(const BernsteinSpec& spec, int m, double lambda) {
    if (!(lambda > 0.0)) throw DomainError("levy_exp_moment needs lambda > 0");
    if (m < 0) throw ContractError("levy_exp_moment needs m >= 0");
    if (spec.family() == Family::Linear) return 0.0;
    if (m == 0) {
        if (spec.infinite_activity())
            throw DivergentIntegralError("zeroth Levy moment diverges for infinite-activity families");
        return spec.rate2() * std::exp(-lambda);
    }
    return std::exp(detail::log_f_derivative(spec, m, lambda).log_abs);
}

// pi_k = lambda^k / (k! f(lambda)) \int e^{-lambda s} s^k nu(ds), evaluated from
// the derivatives of f in log space. Linear: all mass on k = 1.
inline double jump_size_pmf(const ProcessParams& params, int k) {
    if (k < 1) throw DomainError("jump sizes start at 1");
    const auto& spec = params.spec;
    if (spec.family() == Family::Linear) return k == 1 ? 1.0 : 0.0;
    const double lam = params.lambda;
    const auto d = detail::log_f_derivative(spec, k, lam);
    return std::exp(k * std::log(lam) - std::lgamma(k + 1.0) - std::log(eval_f(spec, lam)) +
                    d.log_abs);
}

// Per-family closed forms of pi_k: Sibuya, tempered Sibuya, logarithmic and
// zero-truncated Poisson.
inline double jump_size_pmf_closed_form(const ProcessParams& params, int k) {
    if (k < 1) throw DomainError("jump sizes start at 1");
    const auto& spec = params.spec;
    const double lam = params.lambda;
    const double kd = k;
    switch (spec.family()) {
    case Family::Stable: {
        const double a = spec.alpha();
        // (-1)^{k+1} binom(alpha, k) = alpha Gamma(k - alpha) / (Gamma(1 - alpha) k!)
        return std::exp(std::log(a) + std::lgamma(kd - a) - std::lgamma(1.0 - a) -
                        std::lgamma(kd + 1.0));
    }
    case Family::Tempered: {
        const double a = spec.alpha();
        const double th = spec.theta();
        const double sib = std::log(a) + std::lgamma(kd - a) - std::lgamma(1.0 - a) -
                           std::lgamma(kd + 1.0);
        const double ratio = kd * std::log(lam / (lam + th));
        const double norm = a * std::log(lam + th) - std::log(eval_f(spec, lam));
        return std::exp(sib + ratio + norm);
    }
    case Family::Gamma: {
        const double logq = std::log(lam) - std::log1p(lam);
        return std::exp(kd * logq - std::log(kd) - std::log(std::log1p(lam)));
    }
    case Family::DiracUnit:
        return std::exp(-lam + kd * std::log(lam) - std::lgamma(kd + 1.0) -
                        std::log(-std::expm1(-lam)));
    case Family::Linear: return k == 1 ? 1.0 : 0.0;
    }
    return 0.0;
}

// Upper bound on sum_{k > K} pi_k.
inline double jump_tail_bound(const ProcessParams& params, int K) {
    if (K < 0) throw DomainError("jump_tail_bound needs K >= 0");
    if (K == 0) return 1.0;
    const auto& spec = params.spec;
    const double lam = params.lambda;
    const double Kd = K;
    switch (spec.family()) {
    case Family::Stable:
    case Family::Tempered: {
        const double a = spec.alpha();
        // Sibuya survival P(X > K) = Gamma(K + 1 - alpha) / (Gamma(1 - alpha) Gamma(K + 1)).
        const double log_surv = std::lgamma(Kd + 1.0 - a) - std::lgamma(1.0 - a) - std::lgamma(Kd + 1.0);
        if (spec.family() == Family::Stable) return std::exp(log_surv);
        const double th = spec.theta();
        return std::exp(log_surv + (Kd + 1.0) * std::log(lam / (lam + th)) +
                        a * std::log(lam + th) - std::log(eval_f(spec, lam)));
    }
    case Family::Gamma: {
        const double q = lam / (1.0 + lam);
        return std::exp((Kd + 1.0) * std::log(q) - std::log(Kd + 1.0) - std::log(std::log1p(lam))) /
               (1.0 - q);
    }
    case Family::DiracUnit: {
        const double next = jump_size_pmf_closed_form(params, K + 1);
        const double ratio = lam / (Kd + 2.0);
        if (ratio >= 1.0) return 1.0;
        return next / (1.0 - ratio);
    }
    case Family::Linear: return 0.0;
    }
    return 1.0;
}

inline std::vector<double> jump_rates(const ProcessParams& params, int K) {
    std::vector<double> rates(static_cast<std::size_t>(K) + 1, 0.0);
    const auto& spec = params.spec;
    const double lam = params.lambda;
    if (spec.family() == Family::Linear) {
        if (K >= 1) rates[1] = lam;
        return rates;
    }
    const double loglam = std::log(lam);
    for (int j = 1; j <= K; ++j) {
        const auto d = detail::log_f_derivative(spec, j, lam);
        rates[j] = std::exp(j * loglam - std::lgamma(j + 1.0) + d.log_abs);
    }
    return rates;
}

} // namespace subpois
