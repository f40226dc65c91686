#pragma once
// Bridges of N^f given N^f(t) = k: conditional counts at an earlier time, the
// joint density of jump instants with prescribed heights, conditional moments
// of the gamma-Poisson process, and the difference law of two independent
// copies.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "subpois/analytic.hpp"
#include "subpois/bernstein.hpp"
#include "subpois/errors.hpp"

namespace subpois {

namespace detail {

inline double log_binom(int n, int r) { return log_factorial(n) - log_factorial(r) - log_factorial(n - r); }

inline double log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

inline void check_bridge(double s, double t, int r, int k) {
    if (!(s > 0.0 && s < t)) throw DomainError("conditional law needs 0 < s < t");
    if (k < 0 || r < 0 || r > k) throw DomainError("conditional law needs 0 <= r <= k");
}

inline int check_jump_pattern(double t, std::span<const double> times, std::span<const int> sizes) {
    if (times.size() != sizes.size()) throw DomainError("one jump height per jump time");
    if (times.empty()) throw DomainError("at least one jump is required");
    double prev = 0.0;
    int total = 0;
    for (std::size_t j = 0; j < times.size(); ++j) {
        if (!(times[j] > prev)) throw DomainError("jump times must be strictly increasing and positive");
        if (sizes[j] < 1) throw DomainError("jump heights must be >= 1");
        prev = times[j];
        total += sizes[j];
    }
    if (!(prev < t)) throw DomainError("jump times must lie before t");
    return total;
}

} // namespace detail

// Pr{N(s) = r | N(t) = k} for f(mu) = mu^alpha, alpha in (0,1]:
//   binom(k,r) C_r(s) C_{k-r}(t-s) / C_k(t),  C_n(x) = sum_j c_{j,n} x^j, C_0 = 1.
// The exponentials of p_r(s) p_{k-r}(t-s) / p_k(t) cancel, including the p_0 factor.
inline double conditional_pmf_spacefractional(double alpha, double lambda, double s, double t, int r, int k) {
    detail::check_alpha_closed(alpha);
    detail::check_bridge(s, t, r, k);
    detail::check_cap(k, kDefaultKCap);
    if (k == 0) return 1.0;
    const auto rates = detail::stable_rates(alpha, lambda, k);
    const auto P = compound_polynomials(rates, k);
    // P_n = C_n / n!, so binom(k,r) C_r C_{k-r} / C_k = P_r P_{k-r} / P_k.
    return P[r](s) * P[k - r](t - s) / P[k](t);
}

// Beta-binomial bridge of the gamma-Poisson process; lambda drops out.
inline double conditional_pmf_gamma(double s, double t, int r, int k) {
    detail::check_bridge(s, t, r, k);
    return std::exp(detail::log_binom(k, r) + detail::log_beta(s + r, t - s + k - r) - detail::log_beta(s, t - s));
}

// Density of {tau_j^{l_j} in dt_j, j = 1..r} given N^alpha(t) = k on the simplex
// 0 < t_1 < ... < t_r < t. It does not depend on the times:
//   k! prod_j (lambda^alpha w(l_j)) / sum_n c_{n,k} t^n,
//   w(l) = (-1)^{l+1} Gamma(alpha+1) / (l! Gamma(alpha+1-l)) = alpha (1-alpha)...(l-1-alpha) / l!.
inline double jump_times_density_spacefractional(double alpha, double lambda, double t, std::span<const double> times,
                                                 std::span<const int> sizes) {
    detail::check_alpha_closed(alpha);
    const int k = detail::check_jump_pattern(t, times, sizes);
    detail::check_cap(k, kDefaultKCap);
    const auto rates = detail::stable_rates(alpha, lambda, k);
    const auto P = compound_polynomials(rates, k);
    double num = 1.0;
    for (int l : sizes) num *= rates[static_cast<std::size_t>(l)];
    // k! prod / (k! P_k(t)).
    return num / P[k](t);
}

// Gamma-Poisson analogue: k! Gamma(t) / Gamma(t+k) prod_j 1/l_j.
inline double jump_times_density_gamma(double t, std::span<const double> times, std::span<const int> sizes) {
    const int k = detail::check_jump_pattern(t, times, sizes);
    double log_d = detail::log_factorial(k) + std::lgamma(t) - std::lgamma(t + k);
    for (int l : sizes) log_d -= std::log(static_cast<double>(l));
    return std::exp(log_d);
}

// Any family: the same construction with the jump-rate table c_l,
//   prod_j c_{l_j} / P_k(t),  p_k(t) = e^{-t f(lambda)} P_k(t).
inline double jump_times_density(const ProcessParams& params, double t, std::span<const double> times,
                                 std::span<const int> sizes) {
    const int k = detail::check_jump_pattern(t, times, sizes);
    detail::check_cap(k, kDefaultKCap);
    const auto rates = jump_rates(params, k);
    const auto P = compound_polynomials(rates, k);
    double num = 1.0;
    for (int l : sizes) num *= rates[static_cast<std::size_t>(l)];
    return num / P[k](t);
}

// Total mass of a time-independent jump-times density over all compositions
// (l_1..l_r) of k: sum D(l) t^r / r!, the simplex of r ordered times having
// volume t^r / r!. Enumerates 2^{k-1} compositions.
template <class Density>
double jump_times_total_mass(Density density, double t, int k) {
    if (k < 1 || k > 24) throw DomainError("composition enumeration supports 1 <= k <= 24");
    double total = 0.0;
    for (unsigned mask = 0; mask < (1u << (k - 1)); ++mask) {
        std::vector<int> sizes{1};
        for (int b = 0; b < k - 1; ++b) {
            if (mask & (1u << b)) sizes.push_back(1);
            else ++sizes.back();
        }
        const auto r = static_cast<int>(sizes.size());
        std::vector<double> times(sizes.size());
        for (int j = 0; j < r; ++j) times[j] = t * (j + 1) / (r + 1);
        total += density(std::span<const double>(times), std::span<const int>(sizes)) *
                 std::exp(r * std::log(t) - detail::log_factorial(r));
    }
    return total;
}

struct ConditionalGammaStats {
    double mean_s = 0.0;          // E[N(s) | N(t) = k]
    double second_moment_s = 0.0; // E[N(s)^2 | N(t) = k]
    double variance_s = 0.0;      // Var[N(s) | N(t) = k]
    double cross_moment = 0.0;    // E[N(s) N(w) | N(t) = k]
    double covariance = 0.0;      // Cov[N(s), N(w) | N(t) = k]
};

inline ConditionalGammaStats conditional_gamma_stats(double s, double w, double t, int k) {
    if (!(s > 0.0 && s <= w && w < t)) throw DomainError("conditional_gamma_stats needs 0 < s <= w < t");
    if (k < 0) throw DomainError("k must be >= 0");
    const double kd = k;
    const double tt1 = t * (t + 1.0);
    ConditionalGammaStats out;
    out.mean_s = kd * s / t;
    out.second_moment_s = s / t * kd + kd * (kd - 1.0) * s / t * (s + 1.0) / (t + 1.0);
    out.variance_s = s * kd * (t - s) / tt1 * (1.0 + kd / t);
    out.cross_moment = kd * s / t + kd * (kd - 1.0) * s * (s + 1.0) / tt1 + kd * (kd - 1.0) * s * (w - s) / tt1;
    out.covariance = kd / tt1 * (1.0 + kd / t) * std::min(s, w) * std::min(t - s, t - w);
    return out;
}

// ---------------------------------------------------------------------------
// Law of N_1(t) - N_2(t) for independent copies.

struct BoundedValue {
    double value = 0.0;
    double tail_bound = 0.0; // the true value lies in [value, value + tail_bound]
};

// Gamma-Poisson difference: sum_k nb(k) nb(k+|r|), truncated once a geometric
// bound on the remaining terms falls below `tol`.
inline BoundedValue skellam_gamma_pmf_bounded(double lambda, double t, int r, double tol = 1e-17) {
    if (!(lambda > 0.0) || !(t > 0.0)) throw DomainError("skellam_gamma_pmf needs lambda > 0 and t > 0");
    const int a = std::abs(r);
    const double q = lambda / (1.0 + lambda);
    BoundedValue out;
    const int k_min = static_cast<int>(std::ceil(lambda * t)) + 2;
    for (int k = 0; k < 1000000; ++k) {
        const double term = pmf_negative_binomial(lambda, t, k) * pmf_negative_binomial(lambda, t, k + a);
        out.value += term;
        if (k < k_min) continue;
        // nb(j+1)/nb(j) = q (j+t)/(j+1) is monotone in j, so its supremum over
        // j >= k sits at j = k or in the limit q.
        const auto ratio_sup = [&](int j) { return q * std::max(1.0, (j + t) / (j + 1.0)); };
        const double rho = ratio_sup(k) * ratio_sup(k + a);
        if (rho >= 1.0) continue;
        const double bound = term * rho / (1.0 - rho);
        if (bound <= tol * out.value || bound < 1e-300) {
            out.tail_bound = bound;
            return out;
        }
    }
    throw AccuracyError("skellam series did not converge");
}

inline double skellam_gamma_pmf(double lambda, double t, int r) { return skellam_gamma_pmf_bounded(lambda, t, r).value; }

// Generic difference law from a pmf table: sum_{k<=K} p_k p_{k+|r|}; the
// remainder is bounded by tail(K)^2 with tail(K) the missing mass.
inline BoundedValue difference_pmf(const ProcessParams& params, double t, int r, int K = 200) {
    const int a = std::abs(r);
    const auto table = pmf_table(params, t, std::min(K + a, kDefaultKCap));
    const int top = table.support_max() - a;
    BoundedValue out;
    for (int k = 0; k <= top; ++k) out.value += table.probs[k] * table.probs[k + a];
    const double tail = missing_mass_bound(std::vector<double>(table.probs.begin(), table.probs.begin() + top + 1));
    out.tail_bound = tail * tail;
    return out;
}

} // namespace subpois
