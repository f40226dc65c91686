#include <cmath>
#include <functional>
#include <vector>

#include <gtest/gtest.h>

#include "subpois/conditional.hpp"

using namespace subpois;

namespace {

// Every composition of k, built recursively (first part, then the rest).
void compositions(int k, std::vector<int>& prefix, const std::function<void(const std::vector<int>&)>& visit) {
    if (k == 0) {
        visit(prefix);
        return;
    }
    for (int first = 1; first <= k; ++first) {
        prefix.push_back(first);
        compositions(k - first, prefix, visit);
        prefix.pop_back();
    }
}

// Sum of density * t^r / r! over compositions, with random-looking but ordered times.
template <class Density>
double composition_mass(Density density, double t, int k) {
    double total = 0.0;
    std::vector<int> prefix;
    compositions(k, prefix, [&](const std::vector<int>& sizes) {
        const int r = static_cast<int>(sizes.size());
        std::vector<double> times;
        double acc = 0.0;
        for (int j = 0; j < r; ++j) {
            acc += (0.9 / r) * (j % 2 ? 0.7 : 1.2);
            times.push_back(t * acc / 1.2);
        }
        total += density(times, sizes) * std::pow(t, r) / std::tgamma(r + 1.0);
    });
    return total;
}

// e^{-2m} I_r(2m) with I_r(x) = sum_k (x/2)^{2k+r} / (k! (k+r)!), summed in logs.
double classical_skellam(double m, int r) {
    const int a = std::abs(r);
    double s = 0.0;
    for (int k = 0; k < 400; ++k)
        s += std::exp((2.0 * k + a) * std::log(m) - std::lgamma(k + 1.0) - std::lgamma(k + a + 1.0) - 2.0 * m);
    return s;
}

} // namespace

TEST(ConditionalSpaceFractional, Examples) {
    for (int k = 0; k <= 8; ++k)
        for (int r = 0; r <= k; ++r) {
            const double binom = std::exp(std::lgamma(k + 1.0) - std::lgamma(r + 1.0) - std::lgamma(k - r + 1.0));
            const double expect = binom * std::pow(0.3, r) * std::pow(0.7, k - r);
            EXPECT_NEAR(conditional_pmf_spacefractional(1.0, 2.5, 0.3, 1.0, r, k), expect, 1e-13);
        }
    EXPECT_EQ(conditional_pmf_spacefractional(0.5, 1.0, 0.5, 1.0, 0, 0), 1.0);
}

TEST(ConditionalSpaceFractional, RatioOfPmfsOracle) {
    const double a = 0.5, lam = 1.0, s = 1.0, t = 2.0;
    const ProcessParams p{BernsteinSpec::stable(a), lam};
    for (int k : {1, 2, 5, 9}) {
        double row = 0.0;
        for (int r = 0; r <= k; ++r) {
            const double v = conditional_pmf_spacefractional(a, lam, s, t, r, k);
            EXPECT_NEAR(v, pmf(p, s, r) * pmf(p, t - s, k - r) / pmf(p, t, k), 1e-13);
            row += v;
        }
        EXPECT_NEAR(row, 1.0, 1e-12);
    }
}

TEST(ConditionalSpaceFractional, DomainErrors) {
    EXPECT_THROW(conditional_pmf_spacefractional(0.5, 1.0, 2.0, 2.0, 0, 1), DomainError);
    EXPECT_THROW(conditional_pmf_spacefractional(0.5, 1.0, 1.0, 2.0, 3, 2), DomainError);
}

TEST(ConditionalGamma, Examples) {
    EXPECT_EQ(conditional_pmf_gamma(0.4, 1.0, 0, 0), 1.0);
    EXPECT_NEAR(conditional_pmf_gamma(1.5, 3.0, 0, 1), 0.5, 1e-15);
    EXPECT_NEAR(conditional_pmf_gamma(1.5, 3.0, 1, 1), 0.5, 1e-15);
    EXPECT_NEAR(conditional_pmf_gamma(1.0, 2.0, 1, 2), 1.0 / 3.0, 1e-15);
    EXPECT_THROW(conditional_pmf_gamma(1.0, 1.0, 0, 1), DomainError);
    EXPECT_THROW(conditional_pmf_gamma(0.5, 1.0, 2, 1), DomainError);
}

TEST(ConditionalGamma, RowsSumToOneAndMatchPmfRatio) {
    for (double lam : {0.5, 1.0, 4.0}) {
        const ProcessParams p{BernsteinSpec::gamma(), lam};
        for (double s : {0.2, 1.0, 2.7})
            for (int k : {1, 3, 10, 40}) {
                double row = 0.0;
                for (int r = 0; r <= k; ++r) {
                    const double v = conditional_pmf_gamma(s, 3.0, r, k);
                    row += v;
                    EXPECT_NEAR(v, pmf(p, s, r) * pmf(p, 3.0 - s, k - r) / pmf(p, 3.0, k), 1e-11);
                }
                EXPECT_NEAR(row, 1.0, 1e-10);
            }
    }
}

TEST(JumpTimesSpaceFractional, Examples) {
    const double a = 0.6, lam = 1.8, t = 1.3;
    const double L = std::pow(lam, a);
    const ProcessParams p{BernsteinSpec::stable(a), lam};
    for (int k = 1; k <= 6; ++k) {
        std::vector<double> times;
        for (int j = 1; j <= k; ++j) times.push_back(t * j / (k + 1.0));
        const std::vector<int> ones(static_cast<std::size_t>(k), 1);
        // k! (a L)^k / sum c_{j,k} t^j, with sum c_{j,k} t^j = k! e^{L t} p_k(t).
        const double expect = std::pow(a * L, k) / (std::exp(L * t) * pmf(p, t, k));
        EXPECT_NEAR(jump_times_density_spacefractional(a, lam, t, times, ones) / expect, 1.0, 1e-12);
    }
    const double two[] = {0.5};
    const int h2[] = {2};
    // Single jump of height two: the half-weight display integrates to 1/2 together
    // with its two-unit-jump companion, so the normalized constant is twice that.
    const double x = a * L * t;
    EXPECT_NEAR(jump_times_density_spacefractional(a, lam, t, two, h2),
                (a * (1.0 - a) * L) / (x * x + a * (1.0 - a) * L * t), 1e-14);
}

TEST(JumpTimesSpaceFractional, UnitAlphaIsUniformOnSimplex) {
    for (int k = 1; k <= 6; ++k)
        for (double t : {0.5, 2.0}) {
            std::vector<double> times;
            for (int j = 1; j <= k; ++j) times.push_back(t * j / (k + 1.0));
            const std::vector<int> ones(static_cast<std::size_t>(k), 1);
            EXPECT_NEAR(jump_times_density_spacefractional(1.0, 3.0, t, times, ones), std::tgamma(k + 1.0) / std::pow(t, k),
                        1e-12 * std::tgamma(k + 1.0) / std::pow(t, k));
        }
}

TEST(JumpTimesSpaceFractional, ConstantInTheTimes) {
    const int sizes[] = {1, 2, 1};
    const double t1[] = {0.1, 0.2, 0.3}, t2[] = {0.05, 0.6, 0.95};
    EXPECT_EQ(jump_times_density_spacefractional(0.5, 1.0, 1.0, t1, sizes),
              jump_times_density_spacefractional(0.5, 1.0, 1.0, t2, sizes));
}

TEST(JumpTimesSpaceFractional, InvalidPatterns) {
    const int sizes[] = {1, 1};
    const double unordered[] = {0.5, 0.2}, late[] = {0.2, 1.5};
    EXPECT_THROW(jump_times_density_spacefractional(0.5, 1.0, 1.0, unordered, sizes), DomainError);
    EXPECT_THROW(jump_times_density_spacefractional(0.5, 1.0, 1.0, late, sizes), DomainError);
    const double one[] = {0.5};
    EXPECT_THROW(jump_times_density_spacefractional(0.5, 1.0, 1.0, one, sizes), DomainError);
    const int zero[] = {0};
    EXPECT_THROW(jump_times_density_gamma(1.0, one, zero), DomainError);
}

TEST(JumpTimesGamma, SpecialCases) {
    const double t = 2.5;
    for (int k = 1; k <= 6; ++k) {
        const double base = std::exp(std::lgamma(k + 1.0) + std::lgamma(t) - std::lgamma(t + k));
        std::vector<double> times;
        for (int j = 1; j <= k; ++j) times.push_back(t * j / (k + 1.0));
        const std::vector<int> ones(static_cast<std::size_t>(k), 1);
        EXPECT_NEAR(jump_times_density_gamma(t, times, ones), base, 1e-14 * base);
        const double mid[] = {1.0};
        const int single[] = {k};
        EXPECT_NEAR(jump_times_density_gamma(t, mid, single), base / k, 1e-14 * base);
    }
}

TEST(JumpTimes, CompositionNormalization) {
    for (int k = 1; k <= 5; ++k)
        for (double t : {0.4, 1.0, 3.0}) {
            for (double a : {0.3, 0.7, 1.0}) {
                auto d = [&](std::span<const double> ti, std::span<const int> si) {
                    return jump_times_density_spacefractional(a, 1.4, t, ti, si);
                };
                EXPECT_NEAR(composition_mass(d, t, k), 1.0, 1e-10) << "a=" << a << " k=" << k;
            }
            auto g = [&](std::span<const double> ti, std::span<const int> si) { return jump_times_density_gamma(t, ti, si); };
            EXPECT_NEAR(composition_mass(g, t, k), 1.0, 1e-10) << "gamma k=" << k;
        }
}

TEST(JumpTimes, GenericDensityAgreesAndNormalizes) {
    const double t = 1.7;
    const double times[] = {0.3, 0.9};
    const int sizes[] = {2, 1};
    EXPECT_NEAR(jump_times_density({BernsteinSpec::stable(0.4), 2.0}, t, times, sizes),
                jump_times_density_spacefractional(0.4, 2.0, t, times, sizes), 1e-13);
    EXPECT_NEAR(jump_times_density({BernsteinSpec::gamma(), 3.0}, t, times, sizes),
                jump_times_density_gamma(t, times, sizes), 1e-13);
    const ProcessParams ps[] = {{BernsteinSpec::tempered(0.5, 1.0), 1.0}, {BernsteinSpec::dirac_unit(1.5), 0.8}};
    for (const auto& p : ps)
        for (int k = 1; k <= 6; ++k) {
            auto d = [&](std::span<const double> ti, std::span<const int> si) { return jump_times_density(p, t, ti, si); };
            EXPECT_NEAR(composition_mass(d, t, k), 1.0, 1e-10);
            EXPECT_NEAR(jump_times_total_mass(d, t, k), 1.0, 1e-10);
        }
}

TEST(ConditionalGammaStats, Examples) {
    const auto st = conditional_gamma_stats(1.5, 2.0, 3.0, 7);
    EXPECT_NEAR(st.mean_s, 3.5, 1e-15);
    const auto eq = conditional_gamma_stats(1.2, 1.2, 3.0, 5);
    EXPECT_NEAR(eq.covariance, eq.variance_s, 1e-14);
    EXPECT_NEAR(eq.variance_s, eq.second_moment_s - eq.mean_s * eq.mean_s, 1e-12);
    EXPECT_THROW(conditional_gamma_stats(2.0, 1.0, 3.0, 1), DomainError);
    EXPECT_THROW(conditional_gamma_stats(1.0, 3.0, 3.0, 1), DomainError);
}

TEST(ConditionalGammaStats, MatchBetaBinomialSums) {
    const double s = 0.8, t = 2.2;
    for (int k : {0, 1, 4, 15}) {
        double m1 = 0.0, m2 = 0.0;
        for (int r = 0; r <= k; ++r) {
            const double q = k == 0 ? 1.0 : conditional_pmf_gamma(s, t, r, k);
            m1 += r * q;
            m2 += double(r) * r * q;
        }
        const auto st = conditional_gamma_stats(s, 1.5, t, k);
        EXPECT_NEAR(st.mean_s, m1, 1e-12);
        EXPECT_NEAR(st.second_moment_s, m2, 1e-11);
    }
}

TEST(ConditionalGammaStats, CrossMomentFromJointLaw) {
    // E[N(s) N(w) | N(t)=k] by summing over N(s)=r, then N(w)-N(s) given the rest.
    const double s = 0.6, w = 1.4, t = 2.5;
    const int k = 6;
    double cross = 0.0;
    for (int r = 0; r <= k; ++r) {
        const double pr = conditional_pmf_gamma(s, t, r, k);
        // Given N(s)=r and N(t)=k, the increment on (s,w) is a bridge over (s,t) of k-r events.
        double inc_mean = 0.0;
        for (int j = 1; j <= k - r; ++j) inc_mean += j * conditional_pmf_gamma(w - s, t - s, j, k - r);
        cross += pr * r * (r + inc_mean);
    }
    EXPECT_NEAR(conditional_gamma_stats(s, w, t, k).cross_moment, cross, 1e-11);
}

TEST(ConditionalGammaStats, LawOfTotalVariance) {
    for (double lam : {0.5, 2.0}) {
        const double s = 0.7, t = 1.9;
        const auto table = pmf_table({BernsteinSpec::gamma(), lam}, t, 500);
        double e_var = 0.0;
        for (int k = 0; k <= 500; ++k) e_var += table.probs[k] * conditional_gamma_stats(s, s, t, k).variance_s;
        const double var_mean = (s / t) * (s / t) * lam * (lam + 1.0) * t;
        EXPECT_NEAR(e_var + var_mean, lam * (lam + 1.0) * s, 1e-10);
    }
}

TEST(Skellam, SymmetryAndNormalization) {
    for (double lam : {0.5, 1.0, 3.0})
        for (double t : {0.5, 2.0}) {
            double total = 0.0, tail = 0.0;
            for (int r = -300; r <= 300; ++r) {
                const auto b = skellam_gamma_pmf_bounded(lam, t, r);
                total += b.value;
                tail += b.tail_bound;
                if (r > 0) {
                    EXPECT_EQ(b.value, skellam_gamma_pmf(lam, t, -r));
                }
            }
            EXPECT_LE(total, 1.0 + 1e-12);
            EXPECT_GE(total + tail + 1e-8, 1.0);
            EXPECT_NEAR(total, 1.0, 1e-8);
        }
}

TEST(Skellam, Example) {
    // lambda=1, t=1: nb(k) = 2^{-(k+1)}, so p(0) = sum 4^{-(k+1)} = 1/3.
    EXPECT_NEAR(skellam_gamma_pmf(1.0, 1.0, 0), 1.0 / 3.0, 1e-15);
    // p(r) = sum 2^{-(2k+r+2)} = 2^{-r}/3.
    EXPECT_NEAR(skellam_gamma_pmf(1.0, 1.0, 3), 1.0 / 24.0, 1e-15);
}

TEST(Skellam, GenericDifferenceMatchesGammaSeries) {
    for (int r = -10; r <= 10; ++r)
        EXPECT_NEAR(difference_pmf({BernsteinSpec::gamma(), 1.5}, 1.2, r).value, skellam_gamma_pmf(1.5, 1.2, r), 1e-13);
}

TEST(Skellam, LinearFamilyRecoversClassicalBesselLaw) {
    for (double lam : {0.5, 2.0})
        for (double t : {0.5, 3.0})
            for (int r = -12; r <= 12; ++r) {
                const auto b = difference_pmf({BernsteinSpec::linear(), lam}, t, r);
                EXPECT_NEAR(b.value, classical_skellam(lam * t, r), 1e-13);
            }
}
