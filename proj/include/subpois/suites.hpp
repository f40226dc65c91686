#pragma once
// Validation suites: each runs a family of deterministic identities and Monte
// Carlo comparisons at one configuration and returns one report per check.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <boost/math/special_functions/bessel.hpp>
#include <nlohmann/json.hpp>

#include "subpois/analytic.hpp"
#include "subpois/conditional.hpp"
#include "subpois/hitting.hpp"
#include "subpois/simulation.hpp"
#include "subpois/validation.hpp"

namespace subpois {

struct SuiteConfig {
    ProcessParams params{BernsteinSpec::gamma(), 1.0};
    double t = 1.0;
    int kmax = 30;
    std::uint64_t samples = 1'000'000;
    std::uint64_t seed = 1;
    unsigned workers = 0;
    Thresholds thresholds{};
};

inline const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names{"pmf", "hitting", "moments", "conditional", "ctrw", "skellam"};
    return names;
}

namespace detail {

inline nlohmann::json suite_metadata(const SuiteConfig& c) {
    const auto& s = c.params.spec;
    nlohmann::json m{{"family", std::string(family_name(s.family()))},
                     {"lambda", c.params.lambda},
                     {"t", c.t},
                     {"kmax", c.kmax},
                     {"seed", c.seed},
                     {"samples", c.samples}};
    if (std::isfinite(s.alpha())) m["alpha"] = s.alpha();
    if (std::isfinite(s.theta())) m["theta"] = s.theta();
    if (std::isfinite(s.rate2())) m["rate2"] = s.rate2();
    return m;
}

inline SamplingPlan plan_for(const SuiteConfig& c, std::uint64_t seed_offset, std::size_t n) {
    SamplingPlan p;
    p.t = c.t;
    p.samples = n;
    p.seed = c.seed + seed_offset;
    p.workers = c.workers;
    return p;
}

// Raw moments E N^1..E N^4 from factorial moments.
inline std::array<double, 4> raw_moments(const ProcessParams& p, double t) {
    const double m1 = factorial_moment(p, t, 1), m2 = factorial_moment(p, t, 2);
    const double m3 = factorial_moment(p, t, 3), m4 = factorial_moment(p, t, 4);
    return {m1, m2 + m1, m3 + 3.0 * m2 + m1, m4 + 6.0 * m3 + 7.0 * m2 + m1};
}

} // namespace detail

inline std::vector<ValidationReport> run_pmf_suite(const SuiteConfig& c) {
    std::vector<ValidationReport> out;
    const auto meta = detail::suite_metadata(c);
    const auto bell = pmf_table(c.params, c.t, c.kmax);
    const auto ode = ode_pmf(c.params, c.t, c.kmax);
    double d_ode = 0.0, d_ref = 0.0;
    int rejected = 0;
    for (int k = 0; k <= c.kmax; ++k) {
        d_ode = std::max(d_ode, std::fabs(bell.probs[k] - ode.probs[k]));
        try {
            d_ref = std::max(d_ref, std::fabs(bell.probs[k] - pmf_reference(c.params, c.t, k).value));
        } catch (const CancellationLossError&) {
            ++rejected;
        }
    }
    out.push_back(ValidationReport::make("pmf.bell-vs-ode", StatisticKind::Residual, d_ode, 1e-6, 0, meta));
    auto series_meta = meta;
    series_meta["guard_rejections"] = rejected;
    out.push_back(ValidationReport::make("pmf.bell-vs-reference", StatisticKind::Residual, d_ref, 1e-8, 0, series_meta));

    const auto wide = pmf_table(c.params, c.t, kDefaultKCap);
    double d_pgf = 0.0;
    for (int i = 1; i <= 9; ++i) {
        const double u = 0.1 * i;
        double s = 0.0, uk = 1.0;
        for (double p : wide.probs) {
            s += p * uk;
            uk *= u;
        }
        d_pgf = std::max(d_pgf, std::fabs(s - pgf(c.params, u, c.t)));
    }
    out.push_back(ValidationReport::make("pmf.pgf-identity", StatisticKind::Residual, d_pgf, 1e-8, 0, meta));

    if (c.samples > 0) {
        const auto counts = sample_counts(c.params, detail::plan_for(c, 0, c.samples));
        const double tv = tv_distance(bell, EmpiricalCounts::from_samples(counts, c.kmax));
        out.push_back(ValidationReport::make("pmf.mc-tv", StatisticKind::TotalVariation, tv, c.thresholds.tv, c.samples, meta));
    }
    return out;
}

inline std::vector<ValidationReport> run_hitting_suite(const SuiteConfig& c) {
    std::vector<ValidationReport> out;
    const auto meta = detail::suite_metadata(c);
    const int K = std::clamp(c.kmax, 2, 20);
    const auto q = hitting_density_forms(c.params, K);
    const double f = eval_f(c.params.spec, c.params.lambda);

    double d_norm = 0.0, d_eq = 0.0, d_rec = 0.0;
    for (int k = 1; k <= K; ++k) d_norm = std::max(d_norm, std::fabs(q[k - 1].integral_to_infinity() - 1.0));
    for (double s : {0.1, 0.5, 1.0, 2.0, 5.0}) {
        for (int k = 1; k <= K; ++k) d_eq = std::max(d_eq, hitting_equation_residual(c.params, k, s));
        for (int k = 2; k <= K; ++k) d_rec = std::max(d_rec, hitting_recurrence_check(c.params, k, s));
    }
    out.push_back(ValidationReport::make("hitting.normalization", StatisticKind::Residual, d_norm, 1e-12, 0, meta));
    out.push_back(ValidationReport::make("hitting.governing-equation", StatisticKind::Residual, d_eq, 1e-10, 0, meta));
    out.push_back(ValidationReport::make("hitting.recurrence", StatisticKind::Residual, d_rec, 1e-10, 0, meta));

    double d_gf = 0.0;
    for (double u : {0.1, 0.3, 0.5, 0.7, 0.9})
        for (double s : {0.5, 1.0, 2.0}) {
            const auto part = hitting_gf_partial(c.params, u, s);
            d_gf = std::max(d_gf, std::fabs(part.value - hitting_gf(c.params, u, s)));
        }
    out.push_back(ValidationReport::make("hitting.generating-function", StatisticKind::Residual, d_gf, 1e-8, 0, meta));

    if (c.samples > 0) {
        auto plan = detail::plan_for(c, 1, std::min<std::uint64_t>(c.samples, 200'000));
        plan.t = 20.0 / f;
        const auto paths = sample_paths(c.params, plan);
        for (int k : {1, 2}) {
            const auto hs = empirical_hitting_time(static_cast<std::uint64_t>(k), paths);
            const auto r = chi_square_density(hs.times, [&](double s) { return hitting_survival(c.params, k, s); }, 20,
                                              plan.t);
            auto m = meta;
            m["level"] = k;
            m["horizon"] = plan.t;
            m["censored_fraction"] = hs.censored_fraction();
            m["chi_square"] = r.statistic;
            m["dof"] = r.dof;
            out.push_back(ValidationReport::make("hitting.mc-chi-square-T" + std::to_string(k), StatisticKind::ChiSquare,
                                                 r.p_value, c.thresholds.p_value, plan.samples, m));
        }
    }
    return out;
}

inline std::vector<ValidationReport> run_moments_suite(const SuiteConfig& c) {
    std::vector<ValidationReport> out;
    const auto meta = detail::suite_metadata(c);
    const auto& spec = c.params.spec;
    if (spec.family() == Family::Stable) {
        // Infinite moments are a property of the law; the refusal is the expected outcome.
        double refused = 0.0;
        try {
            (void)factorial_moment(c.params, c.t, 1);
        } catch (const InfiniteMomentError&) {
            refused = 1.0;
        }
        out.push_back(ValidationReport::make("moments.infinite-mean-refusal", StatisticKind::Refusal, refused, 1.0, 0, meta));
        return out;
    }
    const auto raw = detail::raw_moments(c.params, c.t);
    const double mean = raw[0];
    const double var = raw[1] - mean * mean;
    const double mu4 = raw[3] - 4.0 * mean * raw[2] + 6.0 * mean * mean * raw[1] - 3.0 * std::pow(mean, 4);

    if (spec.family() == Family::Tempered) {
        const auto tm = tempered_moments(spec.alpha(), spec.theta(), c.params.lambda, c.t, c.t);
        const double d = std::max(std::fabs(tm.mean - mean), std::fabs(tm.variance - var));
        out.push_back(ValidationReport::make("moments.closed-form-vs-factorial", StatisticKind::Residual, d, 1e-9, 0, meta));
    } else if (spec.family() == Family::Gamma) {
        const auto gm = gamma_moments(c.params.lambda, c.t);
        const double d = std::max(std::fabs(gm.mean - mean), std::fabs(gm.variance - var));
        out.push_back(ValidationReport::make("moments.closed-form-vs-factorial", StatisticKind::Residual, d, 1e-9, 0, meta));
    }
    if (c.samples == 0) return out;

    auto plan = detail::plan_for(c, 2, c.samples);
    const auto paths = sample_paths(c.params, plan);
    std::vector<double> x, sq, cross;
    x.reserve(paths.size());
    const double s_half = 0.5 * c.t;
    const double mean_half = factorial_moment(c.params, s_half, 1);
    for (const auto& p : paths) {
        const double n = static_cast<double>(p.total());
        x.push_back(n);
        sq.push_back((n - mean) * (n - mean));
        cross.push_back((static_cast<double>(p.count_at(s_half)) - mean_half) * (n - mean));
    }
    const double zt = c.thresholds.z;
    out.push_back(ValidationReport::make("moments.mean-z", StatisticKind::MomentZ, moment_z(x, mean, var), zt, plan.samples, meta));
    out.push_back(ValidationReport::make("moments.variance-z", StatisticKind::MomentZ, moment_z(sq, var, mu4 - var * var), zt,
                                         plan.samples, meta));
    // Cov[N(s), N(t)] = Var N(s) for independent increments; the standard error
    // of the product comes from the sample itself.
    const double cov = factorial_moment(c.params, s_half, 2) + mean_half - mean_half * mean_half;
    double m = 0.0, m2 = 0.0;
    for (double y : cross) {
        m += y;
        m2 += y * y;
    }
    const double n = static_cast<double>(cross.size());
    const double ev = m2 / n - (m / n) * (m / n);
    auto cm = meta;
    cm["s"] = s_half;
    out.push_back(ValidationReport::make("moments.covariance-z", StatisticKind::MomentZ, moment_z(cross, cov, ev), zt,
                                         plan.samples, cm));
    return out;
}

// Pr{N(s) = r | N(t) = k} through the independent-increment ratio.
inline double conditional_pmf_ratio(const ProcessParams& p, double s, double t, int r, int k) {
    return pmf(p, s, r) * pmf(p, t - s, k - r) / pmf(p, t, k);
}

inline std::vector<ValidationReport> run_conditional_suite(const SuiteConfig& c) {
    std::vector<ValidationReport> out;
    const auto meta = detail::suite_metadata(c);
    const auto& spec = c.params.spec;
    const double s = 0.5 * c.t;
    const int K = std::clamp(c.kmax, 1, 20);

    double d_sum = 0.0, d_family = 0.0;
    for (int k = 0; k <= K; ++k) {
        double row = 0.0;
        for (int r = 0; r <= k; ++r) {
            const double ratio = conditional_pmf_ratio(c.params, s, c.t, r, k);
            double v = ratio;
            if (spec.family() == Family::Gamma) v = conditional_pmf_gamma(s, c.t, r, k);
            if (spec.family() == Family::Stable)
                v = conditional_pmf_spacefractional(spec.alpha(), c.params.lambda, s, c.t, r, k);
            d_family = std::max(d_family, std::fabs(v - ratio));
            row += v;
        }
        d_sum = std::max(d_sum, std::fabs(row - 1.0));
    }
    out.push_back(ValidationReport::make("conditional.row-sums", StatisticKind::Residual, d_sum, 1e-10, 0, meta));
    out.push_back(ValidationReport::make("conditional.closed-form-vs-ratio", StatisticKind::Residual, d_family, 1e-10, 0, meta));

    if (spec.family() == Family::Gamma) {
        // The ratio route at several rates against the rate-free closed form.
        double d = 0.0;
        for (double lam : {0.25, 1.0, 4.0})
            for (int k = 0; k <= K; ++k)
                for (int r = 0; r <= k; ++r)
                    d = std::max(d, std::fabs(conditional_pmf_ratio({spec, lam}, s, c.t, r, k) -
                                              conditional_pmf_gamma(s, c.t, r, k)));
        out.push_back(ValidationReport::make("conditional.lambda-invariance", StatisticKind::Residual, d, 1e-10, 0, meta));
    }
    if (spec.family() == Family::Stable) {
        double d = 0.0;
        for (int k = 0; k <= K; ++k)
            for (int r = 0; r <= k; ++r) {
                const double binom = std::exp(detail::log_binom(k, r) + r * std::log(s / c.t) + (k - r) * std::log1p(-s / c.t));
                d = std::max(d, std::fabs(conditional_pmf_spacefractional(1.0, c.params.lambda, s, c.t, r, k) - binom));
            }
        out.push_back(ValidationReport::make("conditional.alpha-one-binomial", StatisticKind::Residual, d, 1e-12, 0, meta));
    }
    if (c.samples > 0) {
        const int k = 2;
        const auto plan = detail::plan_for(c, 3, std::min<std::uint64_t>(c.samples, 100'000));
        const auto bridges = sample_bridges(c.params, plan, k);
        std::vector<std::uint64_t> at_s;
        at_s.reserve(bridges.size());
        for (const auto& b : bridges) at_s.push_back(b.count_at(s));
        DistTable law;
        for (int r = 0; r <= k; ++r) law.probs.push_back(conditional_pmf_ratio(c.params, s, c.t, r, k));
        auto m = meta;
        m["k"] = k;
        m["s"] = s;
        out.push_back(ValidationReport::make("conditional.mc-bridge-tv", StatisticKind::TotalVariation,
                                             tv_distance(law, EmpiricalCounts::from_samples(at_s, k)), 1e-2, plan.samples, m));
    }
    return out;
}

inline std::vector<ValidationReport> run_ctrw_suite(const SuiteConfig& c) {
    std::vector<ValidationReport> out;
    const auto meta = detail::suite_metadata(c);
    if (c.samples == 0) return out;
    const auto table = pmf_table(c.params, c.t, c.kmax);
    auto plan = detail::plan_for(c, 4, c.samples);
    const auto path = sample_counts(c.params, plan);
    plan.method = SamplerMethod::Ctrw;
    std::vector<double> tv;
    for (std::uint64_t n : {1, 2, 3}) {
        plan.ctrw_n = n;
        plan.seed = c.seed + 10 + n;
        const auto counts = sample_counts(c.params, plan);
        const auto hist = EmpiricalCounts::from_samples(counts, c.kmax);
        tv.push_back(tv_distance(table, hist));
        if (n == 1) {
            const auto r = two_sample_chi_square(EmpiricalCounts::from_samples(path, c.kmax), hist);
            out.push_back(ValidationReport::make("ctrw.n1-vs-path-two-sample", StatisticKind::TwoSampleChiSquare, r.p_value,
                                                 c.thresholds.p_value, plan.samples, meta));
            out.push_back(ValidationReport::make("ctrw.n1-tv", StatisticKind::TotalVariation, tv.back(), c.thresholds.tv,
                                                 plan.samples, meta));
        }
    }
    auto m = meta;
    m["tv_by_cutoff"] = tv;
    // 0 when TV is nondecreasing in the cutoff and strictly worse at n = 3 than
    // at n = 1 (n = 2 and n = 3 tie when every jump has size 1).
    const double disorder = (tv[0] <= tv[1] && tv[1] <= tv[2] && tv[0] < tv[2]) ? 0.0 : 1.0;
    out.push_back(ValidationReport::make("ctrw.tv-grows-with-cutoff", StatisticKind::Residual, disorder, 0.5, plan.samples, m));
    return out;
}

inline std::vector<ValidationReport> run_skellam_suite(const SuiteConfig& c) {
    std::vector<ValidationReport> out;
    const auto meta = detail::suite_metadata(c);
    const auto& spec = c.params.spec;
    const auto table = pmf_table(c.params, c.t, kDefaultKCap);
    const int R = std::min(table.support_max(), 200);
    const auto diff = [&](int r) {
        if (spec.family() == Family::Gamma) return skellam_gamma_pmf_bounded(c.params.lambda, c.t, r);
        return difference_pmf(c.params, c.t, r, kDefaultKCap);
    };
    // Sum over |r| <= R plus certified bounds: per-term remainders and
    // Pr{|D| > R} <= 2 Pr{N > R}.
    double total = 0.0, bound = 0.0;
    for (int r = -R; r <= R; ++r) {
        const auto v = diff(r);
        total += v.value;
        bound += v.tail_bound;
    }
    bound += 2.0 * missing_mass_bound(std::vector<double>(table.probs.begin(), table.probs.begin() + R + 1));
    const double gap = std::max({0.0, total - 1.0, 1.0 - (total + bound)});
    auto nm = meta;
    nm["sum"] = total;
    nm["certified_tail"] = bound;
    out.push_back(ValidationReport::make("skellam.normalization", StatisticKind::Residual, gap, 1e-8, 0, nm));

    // Pr{D = -r} summed directly as sum_k p_{k} p_{k-r}.
    double d_sym = 0.0;
    for (int r = 1; r <= std::min(R, 20); ++r) {
        double neg = 0.0;
        for (int k = r; k <= table.support_max(); ++k) neg += table.probs[k] * table.probs[k - r];
        d_sym = std::max(d_sym, std::fabs(neg - diff(r).value));
    }
    out.push_back(ValidationReport::make("skellam.symmetry", StatisticKind::Residual, d_sym, 1e-10, 0, meta));

    if (spec.family() == Family::Gamma) {
        double d = 0.0;
        for (int r = -10; r <= 10; ++r)
            d = std::max(d, std::fabs(skellam_gamma_pmf(c.params.lambda, c.t, r) - difference_pmf(c.params, c.t, r).value));
        out.push_back(ValidationReport::make("skellam.closed-form-vs-table", StatisticKind::Residual, d, 1e-10, 0, meta));
    }
    if (spec.family() == Family::Linear) {
        const double mu = c.params.lambda * c.t;
        double d = 0.0;
        for (int r = -10; r <= 10; ++r)
            d = std::max(d, std::fabs(std::exp(-2.0 * mu) * boost::math::cyl_bessel_i(std::abs(r), 2.0 * mu) -
                                      difference_pmf(c.params, c.t, r).value));
        out.push_back(ValidationReport::make("skellam.classical-bessel", StatisticKind::Residual, d, 1e-12, 0, meta));
    }
    if (c.samples > 0) {
        auto plan = detail::plan_for(c, 5, c.samples);
        const auto a = sample_counts(c.params, plan);
        plan.seed += 1000;
        const auto b = sample_counts(c.params, plan);
        double zmax = 0.0;
        const double n = static_cast<double>(a.size());
        for (int r = -2; r <= 2; ++r) {
            double hits = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i)
                if (static_cast<double>(a[i]) - static_cast<double>(b[i]) == r) hits += 1.0;
            const double p = diff(r).value;
            zmax = std::max(zmax, std::fabs((hits / n - p) / std::sqrt(p * (1.0 - p) / n)));
        }
        out.push_back(ValidationReport::make("skellam.mc-max-z", StatisticKind::MomentZ, zmax, c.thresholds.z, plan.samples, meta));
    }
    return out;
}

inline std::vector<ValidationReport> run_suite(const std::string& name, const SuiteConfig& c) {
    if (name == "all") {
        std::vector<ValidationReport> out;
        for (const auto& n : suite_names()) {
            auto part = run_suite(n, c);
            out.insert(out.end(), part.begin(), part.end());
        }
        return out;
    }
    if (name == "pmf") return run_pmf_suite(c);
    if (name == "hitting") return run_hitting_suite(c);
    if (name == "moments") return run_moments_suite(c);
    if (name == "conditional") return run_conditional_suite(c);
    if (name == "ctrw") return run_ctrw_suite(c);
    if (name == "skellam") return run_skellam_suite(c);
    throw DomainError("unknown suite '" + name + "'");
}

} // namespace subpois
