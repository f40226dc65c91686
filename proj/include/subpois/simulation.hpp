#pragma once
// Samplers for N^f(t): the compound-Poisson jump chain, the Poisson process run
// on the subordinator clock, the truncated-jump (CTRW) approximation, and
// rejection bridges conditioned on N^f(t) = k.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "subpois/analytic.hpp"
#include "subpois/bernstein.hpp"
#include "subpois/errors.hpp"
#include "subpois/rng.hpp"

namespace subpois {

// Jump sizes and counts saturate here. Only Stable jumps reach it, with
// probability about (2^62)^{-alpha} / Gamma(1 - alpha) per jump.
inline constexpr std::uint64_t kCountCap = std::uint64_t{1} << 62;

inline std::uint64_t saturating_add(std::uint64_t a, std::uint64_t b) noexcept {
    return (a >= kCountCap || b >= kCountCap - a) ? kCountCap : a + b;
}

enum class SamplerMethod : std::uint8_t { Path, TimeChange, Ctrw, Bridge };

inline std::string_view method_name(SamplerMethod m) noexcept {
    switch (m) {
    case SamplerMethod::Path: return "path";
    case SamplerMethod::TimeChange: return "timechange";
    case SamplerMethod::Ctrw: return "ctrw";
    case SamplerMethod::Bridge: return "bridge";
    }
    return "?";
}

inline SamplerMethod parse_method(std::string_view s) {
    if (s == "path") return SamplerMethod::Path;
    if (s == "timechange") return SamplerMethod::TimeChange;
    if (s == "ctrw") return SamplerMethod::Ctrw;
    if (s == "bridge") return SamplerMethod::Bridge;
    throw DomainError("unknown sampler method '" + std::string(s) + "'");
}

struct JumpEvent {
    double time = 0.0;
    std::uint64_t size = 1;
    bool operator==(const JumpEvent&) const = default;
};

struct PathRecord {
    double horizon = 0.0;
    std::vector<JumpEvent> events;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    SamplerMethod method = SamplerMethod::Path;

    std::uint64_t total() const noexcept {
        std::uint64_t n = 0;
        for (const auto& e : events) n = saturating_add(n, e.size);
        return n;
    }

    // N(s) for 0 <= s <= horizon.
    std::uint64_t count_at(double s) const noexcept {
        std::uint64_t n = 0;
        for (const auto& e : events) {
            if (e.time > s) break;
            n = saturating_add(n, e.size);
        }
        return n;
    }

    bool operator==(const PathRecord&) const = default;
};

namespace detail {

// log Pr{Sibuya > k} = log Gamma(k+1-alpha) - log Gamma(1-alpha) - log Gamma(k+1).
// For large k the lgamma difference cancels badly, so the Stirling series of the
// ratio is used instead.
inline double sibuya_log_survival(double alpha, double k) {
    if (k < 1000.0) return std::lgamma(k + 1.0 - alpha) - std::lgamma(1.0 - alpha) - std::lgamma(k + 1.0);
    const double x = k + 1.0;
    const double a = -alpha;
    const double z = x + a;
    const double ratio = (z - 0.5) * std::log1p(a / x) + a * std::log(x) - a + 1.0 / (12.0 * z) - 1.0 / (12.0 * x) -
                         1.0 / (360.0 * z * z * z) + 1.0 / (360.0 * x * x * x);
    return ratio - std::lgamma(1.0 - alpha);
}

} // namespace detail

// Draws jump sizes from pi_k. Both routes share a cached survival table
// S(k) = Pr{size > k}; sizes are drawn by inverting it.
class JumpSampler {
public:
    enum class Route : std::uint8_t { Specialized, Generic };

    explicit JumpSampler(const ProcessParams& params, Route route = Route::Specialized)
        : params_(params), route_(route), family_(params.spec.family()) {
        if (family_ == Family::Linear) {
            surv_ = {1.0, 0.0};
            return;
        }
        if (family_ == Family::Stable || family_ == Family::Tempered) alpha_ = params.spec.alpha();
        if (family_ == Family::Tempered) rho_ = params.lambda / (params.lambda + params.spec.theta());
        if (route_ == Route::Specialized && family_ == Family::Stable) {
            build_sibuya_table(surv_);
        } else if (route_ == Route::Specialized && family_ == Family::Tempered) {
            build_sibuya_table(sibuya_surv_);
            build_table(true);
        } else {
            build_table(route_ == Route::Specialized);
        }
    }

    Route route() const noexcept { return route_; }
    const ProcessParams& params() const noexcept { return params_; }

    std::uint64_t sample(RngStream& rng) const {
        if (route_ == Route::Specialized) {
            switch (family_) {
            case Family::Linear: return 1;
            case Family::Tempered:
                // Sibuya proposal, accept with rho^{k-1}: the tilt lambda^k/(lambda+theta)^k
                // up to a constant.
                for (;;) {
                    const std::uint64_t k = invert_sibuya(sibuya_surv_, rng.uniform_open());
                    if (rng.uniform_open() < std::pow(rho_, static_cast<double>(k - 1))) return k;
                }
            case Family::DiracUnit: {
                std::poisson_distribution<std::uint64_t> pois(params_.lambda);
                for (;;) {
                    const std::uint64_t k = pois(rng);
                    if (k > 0) return k;
                }
            }
            default: break;
            }
        }
        if (family_ == Family::Linear) return 1;
        return invert(rng.uniform_open());
    }

    // A draw from pi conditioned on {size >= n}. n = 1 is exactly sample().
    std::uint64_t sample_at_least(std::uint64_t n, RngStream& rng) const {
        if (n < 1) throw DomainError("cutoff n must be >= 1");
        if (n == 1) return sample(rng);
        const double base = survival(n - 1);
        if (!(base > 0.0)) return n;
        return std::max(n, invert(rng.uniform_open() * base));
    }

    // S(k) = sum_{j > k} pi_j.
    double survival(std::uint64_t k) const {
        if (k < surv_.size()) return surv_[k];
        if (family_ == Family::Stable) return std::exp(detail::sibuya_log_survival(alpha_, static_cast<double>(k)));
        double s = surv_.back();
        for (std::uint64_t j = surv_.size(); j <= k && s > 0.0; ++j) s -= pmf_at(j);
        return std::max(0.0, s);
    }

    std::uint64_t table_size() const noexcept { return surv_.size() - 1; }

private:
    static constexpr std::size_t kStableTable = std::size_t{1} << 16;
    static constexpr std::size_t kMaxTable = std::size_t{1} << 20;
    static constexpr std::uint64_t kMaxContinuation = 10'000'000;

    double pmf_at(std::uint64_t k) const {
        const int ki = static_cast<int>(std::min<std::uint64_t>(k, std::numeric_limits<int>::max()));
        return route_ == Route::Generic ? jump_size_pmf(params_, ki) : jump_size_pmf_closed_form(params_, ki);
    }

    // Sibuya survival through S(k) = S(k-1) (1 - alpha/k): products only, no cancellation.
    void build_sibuya_table(std::vector<double>& surv) const {
        surv.assign(kStableTable + 1, 1.0);
        for (std::size_t k = 1; k <= kStableTable; ++k) surv[k] = surv[k - 1] * (1.0 - alpha_ / static_cast<double>(k));
    }

    // pi_1..pi_N until the tail bound is negligible, then S summed backwards
    // from the tail so small survivals keep full relative precision.
    void build_table(bool closed_form) {
        std::vector<double> pi{0.0};
        const std::size_t limit = family_ == Family::Stable ? kStableTable : kMaxTable;
        for (std::size_t k = 1; k <= limit; ++k) {
            const int ki = static_cast<int>(k);
            pi.push_back(closed_form ? jump_size_pmf_closed_form(params_, ki) : jump_size_pmf(params_, ki));
            if (family_ != Family::Stable && k >= 8 && (k & 7) == 0 && jump_tail_bound(params_, ki) < 1e-18) break;
        }
        const std::size_t N = pi.size() - 1;
        surv_.assign(N + 1, 0.0);
        surv_[N] = family_ == Family::Stable ? std::exp(detail::sibuya_log_survival(alpha_, static_cast<double>(N)))
                                             : jump_tail_bound(params_, static_cast<int>(N));
        for (std::size_t k = N; k >= 1; --k) surv_[k - 1] = surv_[k] + pi[k];
        // Rescale so S(0) = 1 exactly; the correction is at rounding level.
        const double norm = surv_[0];
        for (auto& s : surv_) s /= norm;
    }

    // Smallest k >= 1 with S(k) < v, S the Sibuya survival.
    std::uint64_t invert_sibuya(const std::vector<double>& surv, double v) const {
        if (surv.back() < v) return search(surv, v);
        return sibuya_tail(surv.size() - 1, v);
    }

    std::uint64_t sibuya_tail(std::uint64_t lo, double v) const {
        const double logv = std::log(v);
        std::uint64_t hi = kCountCap;
        if (detail::sibuya_log_survival(alpha_, static_cast<double>(hi)) >= logv) return kCountCap;
        while (hi - lo > 1) {
            const std::uint64_t mid = lo + (hi - lo) / 2;
            if (detail::sibuya_log_survival(alpha_, static_cast<double>(mid)) < logv) hi = mid;
            else lo = mid;
        }
        return hi;
    }

    static std::uint64_t search(const std::vector<double>& surv, double v) {
        // surv is nonincreasing; first index k >= 1 with surv[k] < v.
        const auto it = std::upper_bound(surv.begin() + 1, surv.end(), v, [](double x, double s) { return s < x; });
        return static_cast<std::uint64_t>(it - surv.begin());
    }

    std::uint64_t invert(double v) const {
        if (surv_.back() < v) return search(surv_, v);
        if (family_ == Family::Stable) return sibuya_tail(surv_.size() - 1, v);
        // Light tails: continue the table term by term.
        double s = surv_.back();
        std::uint64_t k = surv_.size() - 1;
        for (std::uint64_t step = 0; step < kMaxContinuation; ++step) {
            ++k;
            s -= pmf_at(k);
            if (s < v) return k;
        }
        return k;
    }

    ProcessParams params_;
    Route route_;
    Family family_;
    double alpha_ = 0.0;
    double rho_ = 0.0;
    std::vector<double> surv_;
    std::vector<double> sibuya_surv_;
};

inline std::uint64_t sample_jump_size(const JumpSampler& sampler, RngStream& rng) { return sampler.sample(rng); }

// ---------------------------------------------------------------------------
// Subordinator marginals H^f(t).

inline constexpr std::uint64_t kDefaultRejectionBudget = 1'000'000;

// Positive alpha-stable variate with E e^{-mu X} = e^{-mu^alpha} (Kanter):
// X = (A(U)/W)^{(1-alpha)/alpha}, U ~ Uniform(0, pi), W ~ Exp(1),
// A(u) = sin(alpha u)^{alpha/(1-alpha)} sin((1-alpha) u) / sin(u)^{1/(1-alpha)}.
inline double sample_positive_stable(double alpha, RngStream& rng) {
    const double u = std::numbers::pi * rng.uniform_open();
    const double w = -std::log(rng.uniform_open());
    const double log_a = alpha / (1.0 - alpha) * std::log(std::sin(alpha * u)) + std::log(std::sin((1.0 - alpha) * u)) -
                         std::log(std::sin(u)) / (1.0 - alpha);
    return std::exp((1.0 - alpha) / alpha * (log_a - std::log(w)));
}

inline double sample_subordinator(const BernsteinSpec& spec, double t, RngStream& rng,
                                  std::uint64_t budget = kDefaultRejectionBudget) {
    if (!(t >= 0.0)) throw DomainError("time must be >= 0");
    if (t == 0.0) return 0.0;
    switch (spec.family()) {
    case Family::Gamma: return std::gamma_distribution<double>(t, 1.0)(rng);
    case Family::Stable: return std::pow(t, 1.0 / spec.alpha()) * sample_positive_stable(spec.alpha(), rng);
    case Family::Tempered: {
        // Exponential tilt of the stable marginal; expected trials e^{theta^alpha t}.
        const double scale = std::pow(t, 1.0 / spec.alpha());
        for (std::uint64_t trial = 0; trial < budget; ++trial) {
            const double h = scale * sample_positive_stable(spec.alpha(), rng);
            if (rng.uniform_open() < std::exp(-spec.theta() * h)) return h;
        }
        throw BudgetError("tempered subordinator: rejection budget exhausted (theta^alpha t too large)");
    }
    case Family::DiracUnit:
        return static_cast<double>(std::poisson_distribution<std::uint64_t>(spec.rate2() * t)(rng));
    case Family::Linear: return t;
    }
    return 0.0;
}

// Poisson(mean) with saturation; beyond 1e12 the normal approximation is used
// (its error is far below the resolution of any count table).
inline std::uint64_t sample_poisson_count(double mean, RngStream& rng) {
    if (!(mean > 0.0)) return 0;
    if (!(mean < static_cast<double>(kCountCap))) return kCountCap;
    if (mean > 1e12) {
        const double x = std::round(std::normal_distribution<double>(mean, std::sqrt(mean))(rng));
        return static_cast<std::uint64_t>(std::clamp(x, 0.0, static_cast<double>(kCountCap)));
    }
    return std::poisson_distribution<std::uint64_t>(mean)(rng);
}

// ---------------------------------------------------------------------------
// Count samplers.

inline PathRecord simulate_path(const ProcessParams& params, double t, RngStream& rng, const JumpSampler& sampler) {
    if (!(t >= 0.0)) throw DomainError("time must be >= 0");
    PathRecord rec{t, {}, rng.seed(), rng.stream(), SamplerMethod::Path};
    const double rate = eval_f(params.spec, params.lambda);
    std::exponential_distribution<double> gap(rate);
    double time = 0.0;
    for (;;) {
        time += gap(rng);
        if (time > t) break;
        rec.events.push_back({time, sampler.sample(rng)});
    }
    return rec;
}

inline PathRecord simulate_path(const ProcessParams& params, double t, RngStream& rng) {
    return simulate_path(params, t, rng, JumpSampler(params));
}

inline std::uint64_t simulate_time_changed(const ProcessParams& params, double t, RngStream& rng,
                                           std::uint64_t budget = kDefaultRejectionBudget) {
    const double h = sample_subordinator(params.spec, t, rng, budget);
    return sample_poisson_count(params.lambda * h, rng);
}

// Compound Poisson with event rate u(n) = f(lambda) S(n-1) and steps drawn from
// pi conditioned on {k >= n}.
inline std::uint64_t simulate_ctrw(const ProcessParams& params, double t, std::uint64_t n, RngStream& rng,
                                   const JumpSampler& sampler) {
    if (n < 1) throw DomainError("CTRW cutoff n must be >= 1");
    if (!(t >= 0.0)) throw DomainError("time must be >= 0");
    const double u = eval_f(params.spec, params.lambda) * sampler.survival(n - 1);
    const std::uint64_t events = sample_poisson_count(u * t, rng);
    std::uint64_t total = 0;
    for (std::uint64_t i = 0; i < events && total < kCountCap; ++i)
        total = saturating_add(total, sampler.sample_at_least(n, rng));
    return total;
}

// First passage of each path to level k; +infinity marks a censored path.
struct HittingSample {
    std::vector<double> times;
    std::size_t censored = 0;
    double horizon = std::numeric_limits<double>::infinity();

    double censored_fraction() const noexcept {
        return times.empty() ? 0.0 : static_cast<double>(censored) / static_cast<double>(times.size());
    }
};

inline HittingSample empirical_hitting_time(std::uint64_t k, const std::vector<PathRecord>& paths) {
    HittingSample out;
    out.times.reserve(paths.size());
    for (const auto& p : paths) {
        out.horizon = std::min(out.horizon, p.horizon);
        double hit = std::numeric_limits<double>::infinity();
        if (k == 0) {
            hit = 0.0;
        } else {
            std::uint64_t n = 0;
            for (const auto& e : p.events) {
                n = saturating_add(n, e.size);
                if (n >= k) {
                    hit = e.time;
                    break;
                }
            }
        }
        if (std::isinf(hit)) ++out.censored;
        out.times.push_back(hit);
    }
    return out;
}

inline constexpr std::uint64_t kDefaultBridgeBudget = 10'000'000;

inline PathRecord conditional_bridge_sample(const ProcessParams& params, double t, std::uint64_t k, RngStream& rng,
                                            const JumpSampler& sampler, std::uint64_t budget = kDefaultBridgeBudget) {
    for (std::uint64_t trial = 0; trial < budget; ++trial) {
        auto rec = simulate_path(params, t, rng, sampler);
        if (rec.total() == k) {
            rec.method = SamplerMethod::Bridge;
            return rec;
        }
    }
    double p = -1.0;
    try {
        if (k <= static_cast<std::uint64_t>(kDefaultKCap)) p = pmf(params, t, static_cast<int>(k));
    } catch (const Error&) {
    }
    throw BudgetError("bridge sampler: budget exhausted before hitting N(t) = " + std::to_string(k), p);
}

// ---------------------------------------------------------------------------
// Batched, worker-count independent drivers.

struct SamplingPlan {
    double t = 1.0;
    std::size_t samples = 0;
    std::uint64_t seed = 0;
    unsigned workers = 1;
    SamplerMethod method = SamplerMethod::Path;
    std::uint64_t ctrw_n = 1;
    JumpSampler::Route route = JumpSampler::Route::Specialized;
};

inline std::vector<std::uint64_t> sample_counts(const ProcessParams& params, const SamplingPlan& plan) {
    const JumpSampler sampler(params, plan.route);
    switch (plan.method) {
    case SamplerMethod::Path:
        return generate_parallel<std::uint64_t>(plan.samples, plan.seed, plan.workers, [&](RngStream& rng) {
            return simulate_path(params, plan.t, rng, sampler).total();
        });
    case SamplerMethod::TimeChange:
        return generate_parallel<std::uint64_t>(plan.samples, plan.seed, plan.workers,
                                                [&](RngStream& rng) { return simulate_time_changed(params, plan.t, rng); });
    case SamplerMethod::Ctrw:
        return generate_parallel<std::uint64_t>(plan.samples, plan.seed, plan.workers, [&](RngStream& rng) {
            return simulate_ctrw(params, plan.t, plan.ctrw_n, rng, sampler);
        });
    case SamplerMethod::Bridge: throw DomainError("bridge sampling needs a target count; use sample_bridges");
    }
    return {};
}

inline std::vector<PathRecord> sample_paths(const ProcessParams& params, const SamplingPlan& plan) {
    const JumpSampler sampler(params, plan.route);
    return generate_parallel<PathRecord>(plan.samples, plan.seed, plan.workers,
                                         [&](RngStream& rng) { return simulate_path(params, plan.t, rng, sampler); });
}

inline std::vector<PathRecord> sample_bridges(const ProcessParams& params, const SamplingPlan& plan, std::uint64_t k,
                                              std::uint64_t budget = kDefaultBridgeBudget) {
    const JumpSampler sampler(params, plan.route);
    return generate_parallel<PathRecord>(plan.samples, plan.seed, plan.workers, [&](RngStream& rng) {
        return conditional_bridge_sample(params, plan.t, k, rng, sampler, budget);
    });
}

} // namespace subpois
