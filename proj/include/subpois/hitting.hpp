#pragma once
// First-passage times T_k = inf{t : N^f(t) >= k}.
//
// Every object here is e^{-s f(lambda)} times a polynomial in s, so densities,
// their s-derivatives and the identities they satisfy are handled exactly on
// PolyExpForm coefficients; nothing is differenced numerically.

#include <cmath>
#include <vector>

#include "subpois/analytic.hpp"
#include "subpois/bernstein.hpp"
#include "subpois/errors.hpp"
#include "subpois/polyexp.hpp"

namespace subpois {

// q_k(s) = e^{-s f(lambda)} R_k(s).
using HittingDensityForm = PolyExpForm;

namespace detail {

inline void check_hitting_level(int k) {
    if (k < 1) throw DomainError("hitting level must be >= 1 (T_0 = 0)");
}

} // namespace detail

namespace detail {

// T_n = sum_{j>n} c_j, the rate of jumps taller than n. Subtracting partial sums
// from f(lambda) cancels once the tail is small, so light tails are summed
// forward until the certified remainder is negligible.
inline std::vector<double> jump_tail_rates(const ProcessParams& params, int K) {
    const double f = eval_f(params.spec, params.lambda);
    std::vector<double> tail(static_cast<std::size_t>(K) + 1, 0.0);
    tail[0] = f;
    const Family fam = params.spec.family();
    if (fam == Family::Linear) return tail;
    if (fam == Family::Stable) {
        const double a = params.spec.alpha();
        for (int n = 1; n <= K; ++n)
            tail[n] = f * std::exp(std::lgamma(n + 1.0 - a) - std::lgamma(1.0 - a) - std::lgamma(n + 1.0));
        return tail;
    }
    const auto rates = jump_rates(params, K);
    double partial = 0.0;
    for (int n = 1; n <= K; ++n) {
        partial += rates[n];
        const double diff = f - partial;
        if (diff > 1e-2 * f) {
            tail[n] = diff;
            continue;
        }
        double acc = 0.0;
        for (int j = n + 1; j < n + 1000000; ++j) {
            acc += f * jump_size_pmf(params, j);
            if (f * jump_tail_bound(params, j) <= 1e-17 * acc || acc == 0.0) break;
        }
        tail[n] = acc;
    }
    return tail;
}

} // namespace detail

// q_1..q_K, index k-1 holds q_k = -d/ds sum_{l<k} p_l(s). Using P_l' = sum_j c_j P_{l-j}
// this is e^{-s f} sum_{m<k} T_{k-1-m} P_m(s): sitting at level m, the next jump
// clears k. Every term is nonnegative.
inline std::vector<HittingDensityForm> hitting_density_forms(const ProcessParams& params, int K) {
    detail::check_hitting_level(K);
    const auto p = pmf_polyexp_table(params, K - 1);
    const auto tail = detail::jump_tail_rates(params, K - 1);
    std::vector<HittingDensityForm> out;
    out.reserve(static_cast<std::size_t>(K));
    for (int k = 1; k <= K; ++k) {
        Polynomial r(0.0);
        for (int m = 0; m < k; ++m) r = r + tail[k - 1 - m] * p[m].poly;
        out.push_back(HittingDensityForm{p[0].decay, r});
    }
    return out;
}

inline HittingDensityForm hitting_density_form(const ProcessParams& params, int k) {
    return hitting_density_forms(params, k).back();
}

inline double hitting_density(const ProcessParams& params, int k, double s) {
    detail::check_hitting_level(k);
    if (!(s > 0.0)) throw DomainError("hitting density needs s > 0");
    return hitting_density_form(params, k)(s);
}

// Pr{T_k > s} = Pr{N(s) < k}.
inline double hitting_survival(const ProcessParams& params, int k, double s) {
    detail::check_hitting_level(k);
    if (!(s >= 0.0)) throw DomainError("hitting survival needs s >= 0");
    if (s == 0.0) return 1.0;
    return pmf_table(params, s, k - 1).mass();
}

// e^{-s f} (f - lambda f' + lambda s f' f)
inline double hitting_density_t2(const ProcessParams& params, double s) {
    if (!(s >= 0.0)) throw DomainError("hitting density needs s >= 0");
    const double lam = params.lambda;
    const double f = eval_f(params.spec, lam);
    const double fp = eval_f_derivative(params.spec, 1, lam);
    return std::exp(-s * f) * (f - lam * fp + lam * s * fp * f);
}

// (-lambda)^l / l! d^l/dlambda^l e^{-s f(lambda)} with s kept symbolic:
// e^{-s f(lambda)} B_l(-s f'(lambda), ..., -s f^{(l)}(lambda)) via the Bell
// recurrence on polynomials in s.
inline PolyExpForm lambda_derivative_term(const ProcessParams& params, int l) {
    if (l < 0) throw DomainError("derivative order must be >= 0");
    const double lam = params.lambda;
    const double f = eval_f(params.spec, lam);
    std::vector<Polynomial> args;
    args.reserve(static_cast<std::size_t>(l));
    for (int j = 1; j <= l; ++j) args.push_back(Polynomial{0.0, -eval_f_derivative(params.spec, j, lam)});
    Polynomial bell = complete_bell<Polynomial>(args);
    const double scale = std::pow(-lam, l) / std::exp(detail::log_factorial(l));
    return PolyExpForm{f, bell * scale};
}

// |q_k - q_{k-1} + d/ds[(-lambda)^{k-1}/(k-1)! d^{k-1}/dlambda^{k-1} e^{-s f(lambda)}]| at s,
// where q_k, q_{k-1} come from hitting_density_forms and the correction from the
// independent Bell expansion in lambda.
inline double hitting_recurrence_check(const ProcessParams& params, int k, double s) {
    if (k < 2) throw DomainError("the recurrence links T_k to T_{k-1}; needs k >= 2");
    const auto q = hitting_density_forms(params, k);
    const auto correction = lambda_derivative_term(params, k - 1).derivative();
    const auto residual = q[k - 1] - q[k - 2] + correction;
    return std::fabs(residual(s));
}

// sum_k u^k q_k(s) = u/(1-u) f(lambda (1-u)) e^{-s f(lambda (1-u))}.
inline double hitting_gf(const ProcessParams& params, double u, double s) {
    if (!(u > 0.0 && u < 1.0)) throw DomainError("hitting_gf needs u in (0,1)");
    const double g = eval_f(params.spec, params.lambda * (1.0 - u));
    return u / (1.0 - u) * g * std::exp(-s * g);
}

// Partial sum sum_{k=1}^{K} u^k q_k(s), with K grown until the certified
// remainder f(lambda) u^{K+1}/(1-u) (q_k <= f(lambda)) is below `tol`.
struct GfPartialSum {
    double value = 0.0;
    int terms = 0;
    double remainder_bound = 0.0;
};

inline GfPartialSum hitting_gf_partial(const ProcessParams& params, double u, double s, double tol = 1e-12) {
    if (!(u > 0.0 && u < 1.0)) throw DomainError("hitting_gf needs u in (0,1)");
    const double f = eval_f(params.spec, params.lambda);
    int K = 1;
    while (f * std::pow(u, K + 1) / (1.0 - u) > tol) ++K;
    if (K > kDefaultKCap) throw CapError("generating-function partial sum needs more terms than the cap");
    const auto q = hitting_density_forms(params, K);
    GfPartialSum out;
    double uk = 1.0;
    for (int k = 1; k <= K; ++k) {
        uk *= u;
        out.value += uk * q[k - 1](s);
    }
    out.terms = K;
    out.remainder_bound = f * std::pow(u, K + 1) / (1.0 - u);
    return out;
}

// f(lambda) q_k - sum_{m=1}^{k-1} (lambda^m/m!) (\int e^{-lambda s} s^m nu(ds)) q_{k-m} + q_k'
// evaluated at s; zero up to rounding when q solves f(lambda (I - B)) q = -q'.
inline double hitting_equation_residual(const ProcessParams& params, int k, double s) {
    detail::check_hitting_level(k);
    const auto q = hitting_density_forms(params, k);
    const auto rates = jump_rates(params, k);
    const double f = eval_f(params.spec, params.lambda);
    PolyExpForm lhs = f * q[k - 1];
    for (int m = 1; m <= k - 1; ++m) lhs = lhs - rates[m] * q[k - 1 - m];
    const auto residual = lhs + q[k - 1].derivative();
    return std::fabs(residual(s));
}

// Erlang(k, rate) density as a form, used for comparisons.
inline HittingDensityForm erlang_form(int k, double rate) {
    detail::check_hitting_level(k);
    std::vector<double> c(static_cast<std::size_t>(k), 0.0);
    c[k - 1] = std::exp(k * std::log(rate) - detail::log_factorial(k - 1));
    return HittingDensityForm{rate, Polynomial(std::move(c))};
}

} // namespace subpois
