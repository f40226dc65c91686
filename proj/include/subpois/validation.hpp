#pragma once
// Goodness-of-fit statistics and self-describing pass/fail reports.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>
#include <nlohmann/json.hpp>

#include "subpois/dist_table.hpp"
#include "subpois/errors.hpp"

namespace subpois {

// Histogram on {0..K} plus one overflow cell for everything above K.
struct EmpiricalCounts {
    std::vector<std::uint64_t> counts;
    std::uint64_t overflow = 0;
    std::uint64_t total = 0;

    static EmpiricalCounts from_samples(std::span<const std::uint64_t> samples, int K) {
        if (K < 0) throw DomainError("histogram needs K >= 0");
        EmpiricalCounts out;
        out.counts.assign(static_cast<std::size_t>(K) + 1, 0);
        for (auto x : samples) {
            if (x <= static_cast<std::uint64_t>(K)) ++out.counts[x];
            else ++out.overflow;
        }
        out.total = samples.size();
        return out;
    }

    int support_max() const noexcept { return static_cast<int>(counts.size()) - 1; }
};

// (1/2) sum_k |p_k - phat_k| over {0..K}, plus the lumped cell above K, where the
// analytic side carries the missing mass 1 - sum p_k.
inline double tv_distance(const DistTable& p, const EmpiricalCounts& emp) {
    if (emp.total == 0) throw DomainError("tv_distance: empty sample");
    if (p.support_max() != emp.support_max()) throw ContractError("tv_distance: table and histogram cover different ranges");
    const double n = static_cast<double>(emp.total);
    double acc = 0.0;
    double mass = 0.0;
    for (std::size_t k = 0; k < p.probs.size(); ++k) {
        acc += std::fabs(p.probs[k] - static_cast<double>(emp.counts[k]) / n);
        mass += p.probs[k];
    }
    acc += std::fabs(std::max(0.0, 1.0 - mass) - static_cast<double>(emp.overflow) / n);
    return 0.5 * acc;
}

struct ChiSquareResult {
    double statistic = 0.0;
    int dof = 0;
    double p_value = 1.0;
    int cells = 0;
};

inline double chi_square_p_value(double statistic, int dof) {
    if (dof <= 0) return 1.0;
    return boost::math::gamma_q(0.5 * dof, 0.5 * statistic);
}

namespace detail {

inline ChiSquareResult finish_chi_square(std::span<const double> observed, std::span<const double> expected) {
    ChiSquareResult r;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        if (expected[i] < 5.0) throw BinningError("expected count below 5 in a chi-square cell");
        const double d = observed[i] - expected[i];
        r.statistic += d * d / expected[i];
    }
    r.cells = static_cast<int>(observed.size());
    r.dof = r.cells - 1;
    r.p_value = chi_square_p_value(r.statistic, r.dof);
    return r;
}

// x with survival(x) = level, survival continuous and nonincreasing on [0, hi].
inline double invert_survival(const std::function<double(double)>& survival, double level, double hi) {
    double lo = 0.0;
    for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        (survival(mid) > level ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace detail

// Chi-square test of positive samples against a law given by its survival
// function. The uncensored range is split into `bins` cells of equal analytic
// mass; samples at +infinity (censored at `horizon`) form one extra cell of mass
// survival(horizon). When that cell would expect fewer than 5 counts it is
// pooled into the last regular cell.
inline ChiSquareResult chi_square_density(std::span<const double> samples, const std::function<double(double)>& survival,
                                          int bins, double horizon = std::numeric_limits<double>::infinity()) {
    if (samples.empty()) throw DomainError("chi_square_density: empty sample");
    if (bins < 2) throw DomainError("chi_square_density needs at least 2 bins");
    const double n = static_cast<double>(samples.size());
    const double censored_mass = std::isfinite(horizon) ? survival(horizon) : 0.0;
    const bool censored_cell = censored_mass * n >= 5.0;

    double hi = horizon;
    if (!std::isfinite(hi)) {
        hi = 1.0;
        while (survival(hi) > 1e-3 / static_cast<double>(bins) && hi < 1e300) hi *= 2.0;
        while (survival(hi) > 0.0 && hi < 1e300) hi *= 2.0;
    }
    std::vector<double> edges;
    for (int i = 1; i < bins; ++i) {
        const double level = 1.0 - (1.0 - censored_mass) * static_cast<double>(i) / bins;
        edges.push_back(detail::invert_survival(survival, level, hi));
    }
    const int cells = bins + (censored_cell ? 1 : 0);
    std::vector<double> observed(static_cast<std::size_t>(cells), 0.0);
    for (double x : samples) {
        if (std::isinf(x) || x > horizon) {
            observed[static_cast<std::size_t>(cells - 1)] += 1.0;
            continue;
        }
        const auto idx = std::upper_bound(edges.begin(), edges.end(), x) - edges.begin();
        observed[static_cast<std::size_t>(idx)] += 1.0;
    }
    std::vector<double> expected(static_cast<std::size_t>(cells), n * (1.0 - censored_mass) / bins);
    if (censored_cell) expected.back() = n * censored_mass;
    else expected.back() += n * censored_mass;
    return detail::finish_chi_square(observed, expected);
}

// Homogeneity test for two count samples. Adjacent cells (0, 1, ..., overflow)
// are pooled left to right until every pooled cell expects >= 5 in both samples.
inline ChiSquareResult two_sample_chi_square(const EmpiricalCounts& a, const EmpiricalCounts& b) {
    if (a.total == 0 || b.total == 0) throw DomainError("two_sample_chi_square: empty sample");
    if (a.support_max() != b.support_max()) throw ContractError("two_sample_chi_square: histograms cover different ranges");
    const double na = static_cast<double>(a.total);
    const double nb = static_cast<double>(b.total);
    std::vector<double> ca(a.counts.begin(), a.counts.end());
    std::vector<double> cb(b.counts.begin(), b.counts.end());
    ca.push_back(static_cast<double>(a.overflow));
    cb.push_back(static_cast<double>(b.overflow));

    std::vector<double> pa, pb;
    double acc_a = 0.0, acc_b = 0.0;
    const auto min_expected = [&](double x, double y) { return std::min(na, nb) * (x + y) / (na + nb); };
    for (std::size_t i = 0; i < ca.size(); ++i) {
        acc_a += ca[i];
        acc_b += cb[i];
        if (min_expected(acc_a, acc_b) >= 5.0) {
            pa.push_back(acc_a);
            pb.push_back(acc_b);
            acc_a = acc_b = 0.0;
        }
    }
    if (acc_a + acc_b > 0.0) {
        if (pa.empty()) {
            pa.push_back(0.0);
            pb.push_back(0.0);
        }
        pa.back() += acc_a;
        pb.back() += acc_b;
    }
    ChiSquareResult r;
    r.cells = static_cast<int>(pa.size());
    r.dof = r.cells - 1;
    for (std::size_t i = 0; i < pa.size(); ++i) {
        const double pooled = pa[i] + pb[i];
        const double ea = na * pooled / (na + nb);
        const double eb = nb * pooled / (na + nb);
        if (ea > 0.0) r.statistic += (pa[i] - ea) * (pa[i] - ea) / ea;
        if (eb > 0.0) r.statistic += (pb[i] - eb) * (pb[i] - eb) / eb;
    }
    r.p_value = chi_square_p_value(r.statistic, r.dof);
    return r;
}

// (sample mean - mean) / sqrt(variance / n).
inline double moment_z(std::span<const double> samples, double mean, double variance) {
    if (samples.empty()) throw DomainError("moment_z: empty sample");
    if (!std::isfinite(mean) || !std::isfinite(variance))
        throw InfiniteMomentError("moment_z: analytic moment is infinite; no z-score exists");
    if (!(variance > 0.0)) throw DomainError("moment_z needs a positive variance");
    double s = 0.0;
    for (double x : samples) s += x;
    const double n = static_cast<double>(samples.size());
    return (s / n - mean) / std::sqrt(variance / n);
}

// ---------------------------------------------------------------------------

enum class StatisticKind : std::uint8_t { TotalVariation, ChiSquare, MomentZ, TwoSampleChiSquare, Residual, Refusal };

inline std::string kind_name(StatisticKind k) {
    switch (k) {
    case StatisticKind::TotalVariation: return "tv";
    case StatisticKind::ChiSquare: return "chi-square";
    case StatisticKind::MomentZ: return "moment-z";
    case StatisticKind::TwoSampleChiSquare: return "two-sample-chi-square";
    case StatisticKind::Residual: return "residual";
    case StatisticKind::Refusal: return "refusal";
    }
    return "?";
}

inline StatisticKind parse_kind(const std::string& s) {
    for (auto k : {StatisticKind::TotalVariation, StatisticKind::ChiSquare, StatisticKind::MomentZ,
                   StatisticKind::TwoSampleChiSquare, StatisticKind::Residual, StatisticKind::Refusal})
        if (kind_name(k) == s) return k;
    throw DomainError("unknown statistic kind '" + s + "'");
}

struct Thresholds {
    double tv = 5e-3;
    double z = 3.0;
    double p_value = 0.01;
};

// Verdict rule by kind: p-values pass above the threshold; TV, |z| and
// residuals pass below it; a refusal passes when the refusal was expected.
struct ValidationReport {
    std::string check;
    StatisticKind kind = StatisticKind::Residual;
    double statistic = 0.0;
    double threshold = 0.0;
    std::uint64_t sample_size = 0;
    bool pass = false;
    nlohmann::json metadata = nlohmann::json::object();

    static bool verdict(StatisticKind kind, double statistic, double threshold) {
        switch (kind) {
        case StatisticKind::ChiSquare:
        case StatisticKind::TwoSampleChiSquare: return statistic > threshold;
        case StatisticKind::MomentZ: return std::fabs(statistic) < threshold;
        case StatisticKind::TotalVariation:
        case StatisticKind::Residual: return statistic < threshold;
        case StatisticKind::Refusal: return statistic == threshold;
        }
        return false;
    }

    static ValidationReport make(std::string check, StatisticKind kind, double statistic, double threshold,
                                 std::uint64_t n, nlohmann::json metadata = nlohmann::json::object()) {
        ValidationReport r{std::move(check), kind, statistic, threshold, n, false, std::move(metadata)};
        r.pass = verdict(kind, statistic, threshold);
        return r;
    }
};

inline void to_json(nlohmann::json& j, const ValidationReport& r) {
    j = nlohmann::json{{"check", r.check},         {"kind", kind_name(r.kind)}, {"statistic", r.statistic},
                       {"threshold", r.threshold}, {"sample_size", r.sample_size}, {"pass", r.pass},
                       {"metadata", r.metadata}};
}

inline void from_json(const nlohmann::json& j, ValidationReport& r) {
    r.check = j.at("check").get<std::string>();
    r.kind = parse_kind(j.at("kind").get<std::string>());
    r.statistic = j.at("statistic").get<double>();
    r.threshold = j.at("threshold").get<double>();
    r.sample_size = j.at("sample_size").get<std::uint64_t>();
    r.pass = j.at("pass").get<bool>();
    r.metadata = j.value("metadata", nlohmann::json::object());
}

inline bool all_pass(std::span<const ValidationReport> reports) {
    return std::all_of(reports.begin(), reports.end(), [](const auto& r) { return r.pass; });
}

} // namespace subpois
