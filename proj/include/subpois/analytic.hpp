#pragma once
// Exact state probabilities of N^f(t) = N(H^f(t)).
//
// The primary route expands (-1)^k/k! d^k/du^k e^{-t f(lambda u)} at u = 1 with
// the Bell recurrence, normalized so that every term is a nonnegative jump rate:
//   p_k(t) = e^{-t f(lambda)} a_k,   k a_k = t sum_{j=1}^{k} j c_j a_{k-j},
// with c_j = lambda^j |f^{(j)}(lambda)| / j!. The per-family series, the
// negative binomial closed form and the forward-equation integrator are
// independent routes used to cross-check it.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "subpois/bernstein.hpp"
#include "subpois/dist_table.hpp"
#include "subpois/errors.hpp"
#include "subpois/polyexp.hpp"

namespace subpois {

inline constexpr int kDefaultKCap = 500;

namespace detail {

inline void check_cap(int k, int cap) {
    if (k < 0) throw DomainError("state index must be >= 0");
    if (k > cap) throw CapError("state index " + std::to_string(k) + " exceeds the cap " + std::to_string(cap));
}

inline double log_factorial(int k) { return std::lgamma(static_cast<double>(k) + 1.0); }

} // namespace detail

// p_0(t)..p_K(t) by the normalized Bell recurrence. Intermediate values are
// rescaled so large t f(lambda) neither underflows p_0 nor overflows a_k.
inline DistTable pmf_table(const ProcessParams& params, double t, int K, int cap = kDefaultKCap) {
    detail::check_cap(K, cap);
    if (!(t >= 0.0)) throw DomainError("time must be >= 0");
    DistTable table;
    table.probs.assign(static_cast<std::size_t>(K) + 1, 0.0);
    table.tail_certified = true;
    if (t == 0.0) {
        table.probs[0] = 1.0;
        return table;
    }
    const auto rates = jump_rates(params, K);
    std::vector<double> a(static_cast<std::size_t>(K) + 1, 0.0);
    a[0] = 1.0;
    double log_scale = -t * eval_f(params.spec, params.lambda);
    constexpr double kBig = 1e200;
    const double log_big = std::log(kBig);
    for (int k = 1; k <= K; ++k) {
        double acc = 0.0;
        for (int j = 1; j <= k; ++j) acc += j * rates[j] * a[k - j];
        a[k] = acc * t / k;
        if (a[k] > kBig) {
            for (int i = 0; i <= k; ++i) a[i] /= kBig;
            log_scale += log_big;
        }
    }
    for (int k = 0; k <= K; ++k) table.probs[k] = a[k] == 0.0 ? 0.0 : std::exp(std::log(a[k]) + log_scale);
    table.tail_bound = missing_mass_bound(table.probs);
    return table;
}

inline double pmf(const ProcessParams& params, double t, int k, int cap = kDefaultKCap) {
    detail::check_cap(k, cap);
    if (!(t > 0.0)) throw DomainError("pmf needs t > 0");
    return pmf_table(params, t, k, cap).probs[static_cast<std::size_t>(k)];
}

// p_0..p_K as exact e^{-t f(lambda)} * polynomial(t) forms.
inline std::vector<PolyExpForm> pmf_polyexp_table(const ProcessParams& params, int K, int cap = kDefaultKCap) {
    detail::check_cap(K, cap);
    const auto rates = jump_rates(params, K);
    const double decay = eval_f(params.spec, params.lambda);
    auto polys = compound_polynomials(rates, K);
    std::vector<PolyExpForm> out;
    out.reserve(polys.size());
    for (auto& p : polys) out.push_back(PolyExpForm{decay, std::move(p)});
    return out;
}

inline PolyExpForm pmf_polyexp(const ProcessParams& params, int k, int cap = kDefaultKCap) {
    return pmf_polyexp_table(params, k, cap).back();
}

// E u^{N(t)} = e^{-t f(lambda (1 - u))}.
inline double pgf(const ProcessParams& params, double u, double t) {
    if (!(u >= 0.0 && u <= 1.0)) throw DomainError("pgf needs u in [0,1]");
    if (!(t >= 0.0)) throw DomainError("pgf needs t >= 0");
    return std::exp(-t * eval_f(params.spec, params.lambda * (1.0 - u)));
}

// ---------------------------------------------------------------------------
// Space-fractional (stable) special case with alpha in (0,1]; alpha = 1 is the
// Poisson limit and is accepted here even though BernsteinSpec excludes it.

namespace detail {

inline void check_alpha_closed(double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ParameterDomainError("alpha must lie in (0,1]");
}

// c_j = lambda^alpha alpha (1-alpha)(2-alpha)...(j-1-alpha) / j!
inline std::vector<double> stable_rates(double alpha, double lambda, int K) {
    std::vector<double> c(static_cast<std::size_t>(K) + 1, 0.0);
    if (K >= 1) c[1] = alpha * std::pow(lambda, alpha);
    for (int j = 1; j < K; ++j) c[j + 1] = c[j] * (j - alpha) / (j + 1);
    return c;
}

} // namespace detail

// Coefficients of p_k^alpha(t) = e^{-lambda^alpha t}/k! * sum_{j=1}^{k} c_{j,k} t^j
// exactly as displayed in closed form for c_{k,k}, c_{k-1,k}, c_{2,k}, c_{1,k}.
// c_{2,k} as printed is only right for k <= 3; see spacefractional_coeffs.
struct SpaceFractionalClosedForms {
    double c_kk = 0.0;
    std::optional<double> c_km1k;
    std::optional<double> c_2k;
    double c_1k = 0.0;
};

inline SpaceFractionalClosedForms spacefractional_closed_forms(double alpha, double lambda, int k) {
    detail::check_alpha_closed(alpha);
    if (k < 1) throw DomainError("coefficients start at k = 1");
    const double L = std::pow(lambda, alpha);
    const double kd = k;
    SpaceFractionalClosedForms out;
    out.c_kk = std::pow(alpha * L, kd);
    double prod_km1 = 1.0; // prod_{j=1}^{k-1} (j - alpha)
    for (int j = 1; j <= k - 1; ++j) prod_km1 *= (j - alpha);
    out.c_1k = alpha * L * prod_km1;
    if (k >= 2) {
        out.c_km1k = std::pow(alpha, kd - 1.0) * (1.0 - alpha) * kd * (kd - 1.0) / 2.0 * std::pow(L, kd - 1.0);
        double prod_km2 = 1.0;
        for (int j = 1; j <= k - 2; ++j) prod_km2 *= (j - alpha);
        out.c_2k = L * L * alpha * alpha * prod_km2 * kd * (kd - 1.0) / 2.0;
    }
    return out;
}

// c_{0,k}..c_{k,k} from the exact expansion (index j holds c_{j,k}); the
// closed forms that hold for every k overwrite their slots.
inline std::vector<double> spacefractional_coeffs(double alpha, double lambda, int k, int cap = kDefaultKCap) {
    detail::check_alpha_closed(alpha);
    detail::check_cap(k, cap);
    if (k < 1) throw DomainError("coefficients start at k = 1");
    const auto rates = detail::stable_rates(alpha, lambda, k);
    const auto polys = compound_polynomials(rates, k);
    const double kfact = std::exp(detail::log_factorial(k));
    std::vector<double> c(static_cast<std::size_t>(k) + 1, 0.0);
    for (int j = 0; j <= k; ++j) c[j] = kfact * polys[k].coeff(static_cast<std::size_t>(j));
    const auto closed = spacefractional_closed_forms(alpha, lambda, k);
    c[k] = closed.c_kk;
    c[1] = closed.c_1k;
    if (closed.c_km1k) c[k - 1] = *closed.c_km1k;
    if (k <= 3 && closed.c_2k) c[2] = *closed.c_2k;
    return c;
}

// Cancellation guard for the alternating series forms.
struct SeriesGuard {
    double max_argument = 30.0;    // reject when the series argument exceeds this
    double max_term_ratio = 1e12;  // reject when max |term| exceeds this multiple of the result
};

namespace detail {

struct SeriesSum {
    long double sum = 0.0L;
    long double max_abs = 0.0L;
};

// sum_{r>=0} (-x)^r / r! * (alpha r)(alpha r - 1)...(alpha r - k + 1)
inline SeriesSum alternating_falling_series(double alpha, double x, int k, double tol) {
    SeriesSum out;
    const long double xl = x;
    const long double al = alpha;
    long double power = 1.0L; // (-x)^r / r!
    int small_run = 0;
    const int r_min = static_cast<int>(std::ceil(x)) + k + 5;
    constexpr int kMaxTerms = 20000;
    for (int r = 0; r < kMaxTerms; ++r) {
        if (r > 0) power *= -xl / static_cast<long double>(r);
        long double ff = 1.0L;
        const long double y = al * static_cast<long double>(r);
        for (int i = 0; i < k; ++i) ff *= (y - static_cast<long double>(i));
        const long double term = power * ff;
        out.sum += term;
        out.max_abs = std::max(out.max_abs, std::fabs(term));
        if (r > r_min && std::fabs(term) <= static_cast<long double>(tol) * std::fabs(out.sum)) {
            if (++small_run >= 3) return out;
        } else {
            small_run = 0;
        }
        if (power == 0.0L) return out;
    }
    throw AccuracyError("alternating series did not converge");
}

inline double guarded_result(const SeriesSum& s, long double prefactor, const SeriesGuard& guard) {
    const long double result = s.sum * prefactor;
    const long double scale = s.max_abs * std::fabs(prefactor);
    if (scale > 0.0L && !(std::fabs(result) * static_cast<long double>(guard.max_term_ratio) >= scale))
        throw CancellationLossError("alternating series lost too many digits to cancellation");
    return static_cast<double>(result);
}

} // namespace detail

// p_k^alpha(t) = (-1)^k/k! sum_r (-lambda^alpha t)^r/r! Gamma(alpha r+1)/Gamma(alpha r+1-k).
inline double pmf_series_spacefractional(double alpha, double lambda, double t, int k, double tol = 1e-17,
                                         SeriesGuard guard = {}) {
    detail::check_alpha_closed(alpha);
    detail::check_cap(k, kDefaultKCap);
    if (!(lambda > 0.0) || !(t > 0.0)) throw DomainError("series needs lambda > 0 and t > 0");
    const double x = std::pow(lambda, alpha) * t;
    if (x > guard.max_argument) throw CancellationLossError("series argument lambda^alpha t above the guard");
    const auto s = detail::alternating_falling_series(alpha, x, k, tol);
    long double pref = std::exp(-static_cast<long double>(detail::log_factorial(k)));
    if (k % 2 == 1) pref = -pref;
    return detail::guarded_result(s, pref, guard);
}

// Tempered counterpart, theta >= 0 (theta = 0 is the space-fractional series):
// p_m = (-1)^m/m! (lambda/(lambda+theta))^m e^{theta^alpha t}
//       sum_k (-t (lambda+theta)^alpha)^k/k! Gamma(alpha k+1)/Gamma(alpha k+1-m).
inline double pmf_series_tempered(double alpha, double theta, double lambda, double t, int m, double tol = 1e-17,
                                  SeriesGuard guard = {}) {
    detail::check_alpha_closed(alpha);
    detail::check_cap(m, kDefaultKCap);
    if (!(theta >= 0.0)) throw ParameterDomainError("theta must be >= 0");
    if (!(lambda > 0.0) || !(t > 0.0)) throw DomainError("series needs lambda > 0 and t > 0");
    const double x = t * std::pow(lambda + theta, alpha);
    if (x > guard.max_argument) throw CancellationLossError("series argument t (lambda+theta)^alpha above the guard");
    const auto s = detail::alternating_falling_series(alpha, x, m, tol);
    const long double log_pref = static_cast<long double>(m) * std::log(static_cast<long double>(lambda) / (lambda + theta)) +
                                 static_cast<long double>(std::pow(theta, alpha) * t) -
                                 static_cast<long double>(detail::log_factorial(m));
    long double pref = std::exp(log_pref);
    if (m % 2 == 1) pref = -pref;
    return detail::guarded_result(s, pref, guard);
}

// lambda^k Gamma(k+t) / (Gamma(t) k! (lambda+1)^{t+k}).
inline double pmf_negative_binomial(double lambda, double t, int k) {
    if (!(lambda > 0.0) || !(t > 0.0)) throw DomainError("negative binomial needs lambda > 0 and t > 0");
    if (k < 0) throw DomainError("state index must be >= 0");
    const double kd = k;
    return std::exp(kd * std::log(lambda) + std::lgamma(kd + t) - std::lgamma(t) - detail::log_factorial(k) -
                    (t + kd) * std::log1p(lambda));
}

inline double pmf_poisson(double mean, int k) {
    if (k < 0) return 0.0;
    if (mean == 0.0) return k == 0 ? 1.0 : 0.0;
    return std::exp(-mean + k * std::log(mean) - detail::log_factorial(k));
}

// N_1(N_2(t)) for the unit Dirac Levy measure: sum_n Pois(n; rate2 t) Pois(k; lambda n).
inline double pmf_series_dirac(double rate2, double lambda, double t, int k) {
    if (!(rate2 > 0.0) || !(lambda > 0.0) || !(t > 0.0)) throw DomainError("dirac series needs positive rates and t");
    if (k < 0) throw DomainError("state index must be >= 0");
    const double mu = rate2 * t;
    double sum = (k == 0) ? std::exp(-mu) : 0.0;
    const int n_min = static_cast<int>(std::ceil(std::max(mu, k / lambda))) + 5;
    for (int n = 1; n < 100000; ++n) {
        const double term = pmf_poisson(mu, n) * pmf_poisson(lambda * n, k);
        sum += term;
        if (n > n_min && term <= 1e-18 * sum) return sum;
    }
    throw AccuracyError("dirac series did not converge");
}

// Independent per-family reference for p_k(t): alternating series for the
// stable and tempered families, closed forms otherwise.
struct ReferenceValue {
    double value = 0.0;
    std::string_view method;
};

inline ReferenceValue pmf_reference(const ProcessParams& params, double t, int k, SeriesGuard guard = {}) {
    const auto& spec = params.spec;
    switch (spec.family()) {
    case Family::Stable:
        return {pmf_series_spacefractional(spec.alpha(), params.lambda, t, k, 1e-17, guard), "series"};
    case Family::Tempered:
        return {pmf_series_tempered(spec.alpha(), spec.theta(), params.lambda, t, k, 1e-17, guard), "series"};
    case Family::Gamma: return {pmf_negative_binomial(params.lambda, t, k), "closed-form"};
    case Family::DiracUnit: return {pmf_series_dirac(spec.rate2(), params.lambda, t, k), "series"};
    case Family::Linear: return {pmf_poisson(params.lambda * t, k), "closed-form"};
    }
    return {};
}

// ---------------------------------------------------------------------------
// Forward-equation oracle:
//   dp_k/dt = -f(lambda) p_k + sum_{m=1}^{k} (lambda^m/m!) p_{k-m} \int e^{-s lambda} s^m nu(ds)
// integrated with classical RK4, halving the step until the sup-norm change
// between successive refinements drops below `tol`.

struct OdeOptions {
    int initial_steps = 32;
    int max_halvings = 14;
    double tol = 1e-8;
};

namespace detail {

inline std::vector<double> rk4_forward(std::span<const double> rates, double decay, double t, int K, int steps) {
    const std::size_t n = static_cast<std::size_t>(K) + 1;
    std::vector<double> p(n, 0.0), k1(n), k2(n), k3(n), k4(n), tmp(n);
    p[0] = 1.0;
    auto rhs = [&](const std::vector<double>& x, std::vector<double>& out) {
        for (std::size_t k = 0; k < n; ++k) {
            double acc = -decay * x[k];
            for (std::size_t m = 1; m <= k; ++m) acc += rates[m] * x[k - m];
            out[k] = acc;
        }
    };
    const double h = t / steps;
    for (int s = 0; s < steps; ++s) {
        rhs(p, k1);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = p[i] + 0.5 * h * k1[i];
        rhs(tmp, k2);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = p[i] + 0.5 * h * k2[i];
        rhs(tmp, k3);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = p[i] + h * k3[i];
        rhs(tmp, k4);
        for (std::size_t i = 0; i < n; ++i) p[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return p;
}

} // namespace detail

inline DistTable ode_pmf(const ProcessParams& params, double t, int K, OdeOptions opts = {}) {
    detail::check_cap(K, kDefaultKCap);
    if (!(t >= 0.0)) throw DomainError("time must be >= 0");
    if (opts.initial_steps < 1) throw DomainError("ode_pmf needs at least one step");
    DistTable table;
    table.tail_certified = true;
    if (t == 0.0) {
        table.probs.assign(static_cast<std::size_t>(K) + 1, 0.0);
        table.probs[0] = 1.0;
        return table;
    }
    const auto rates = jump_rates(params, K);
    const double decay = eval_f(params.spec, params.lambda);
    int steps = opts.initial_steps;
    auto coarse = detail::rk4_forward(rates, decay, t, K, steps);
    for (int h = 0; h < opts.max_halvings; ++h) {
        steps *= 2;
        auto fine = detail::rk4_forward(rates, decay, t, K, steps);
        double change = 0.0;
        for (std::size_t i = 0; i < fine.size(); ++i) change = std::max(change, std::fabs(fine[i] - coarse[i]));
        if (change < opts.tol) {
            table.probs = std::move(fine);
            table.tail_bound = missing_mass_bound(table.probs);
            return table;
        }
        coarse = std::move(fine);
    }
    throw AccuracyError("ode_pmf: step-halving error estimate stayed above tolerance");
}

// ---------------------------------------------------------------------------
// Moments.

// r-th factorial moment E[N(N-1)...(N-r+1)] = B_r(g_1..g_r) with
// g_j = t lambda^j (-1)^{j+1} f^{(j)}(0+), the u-derivatives of the pgf at u = 1.
inline double factorial_moment(const ProcessParams& params, double t, int r) {
    if (r < 1) throw DomainError("factorial moments start at r = 1");
    if (params.spec.family() == Family::Stable)
        throw InfiniteMomentError("stable family: f'(0+) is infinite, so every moment diverges");
    std::vector<double> g(static_cast<std::size_t>(r));
    for (int j = 1; j <= r; ++j) {
        const auto d = detail::log_f_derivative(params.spec, j, 0.0);
        g[j - 1] = d.sign == 0 ? 0.0 : t * std::exp(j * std::log(params.lambda) + d.log_abs);
    }
    return complete_bell<double>(g);
}

// lambda^r t (t+1) ... (t+r-1)
inline double factorial_moment_gamma(double lambda, double t, int r) {
    if (r < 1) throw DomainError("factorial moments start at r = 1");
    double acc = std::pow(lambda, r);
    for (int i = 0; i < r; ++i) acc *= (t + i);
    return acc;
}

struct TemperedMoments {
    double mean = 0.0;
    double variance = 0.0;
    double covariance = 0.0; // Cov[N(s), N(t)]
};

inline TemperedMoments tempered_moments(double alpha, double theta, double lambda, double t, double s) {
    detail::check_alpha_closed(alpha);
    if (theta == 0.0) throw InfiniteMomentError("theta = 0 is the stable case: the mean values diverge");
    if (!(theta > 0.0)) throw ParameterDomainError("theta must be > 0");
    const double rate = alpha * lambda * std::pow(theta, alpha - 2.0) * (lambda * (1.0 - alpha) + theta);
    return {alpha * lambda * std::pow(theta, alpha - 1.0) * t, rate * t, rate * std::min(s, t)};
}

struct GammaMoments {
    double lambda = 0.0;
    double mean = 0.0;
    double variance = 0.0;
    double integrated_mean = 0.0;     // E \int_0^t N(s) ds
    double integrated_variance = 0.0; // Var \int_0^t N(s) ds

    double covariance(double s, double t) const { return lambda * (lambda + 1.0) * std::min(s, t); }
};

inline GammaMoments gamma_moments(double lambda, double t) {
    if (!(lambda >= 0.0) || !(t >= 0.0)) throw DomainError("gamma_moments needs lambda, t >= 0");
    GammaMoments m;
    m.lambda = lambda;
    m.mean = lambda * t;
    m.variance = lambda * t * (lambda + 1.0);
    m.integrated_mean = lambda * t * t / 2.0;
    m.integrated_variance = lambda * (lambda + 1.0) * t * t * t / 3.0;
    return m;
}

} // namespace subpois
