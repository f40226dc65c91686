#pragma once
// Exact algebra for functions of the form e^{-c t} * polynomial(t), which is the
// native shape of every state probability and first-passage density here, plus
// the complete Bell polynomial recurrence used to expand derivatives of
// exponentials.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "subpois/errors.hpp"

namespace subpois {

// Dense real polynomial, coeffs[j] multiplies t^j.
class Polynomial {
public:
    Polynomial() = default;
    explicit Polynomial(double constant) : coeffs_{constant} {}
    Polynomial(std::initializer_list<double> c) : coeffs_(c) {}
    explicit Polynomial(std::vector<double> c) : coeffs_(std::move(c)) {}

    const std::vector<double>& coeffs() const noexcept { return coeffs_; }
    std::vector<double>& coeffs() noexcept { return coeffs_; }

    // Index of the last stored coefficient (-1 for the empty polynomial).
    int degree() const noexcept { return static_cast<int>(coeffs_.size()) - 1; }

    double coeff(std::size_t j) const noexcept { return j < coeffs_.size() ? coeffs_[j] : 0.0; }

    double operator()(double t) const noexcept {
        double acc = 0.0;
        for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * t + *it;
        return acc;
    }

    Polynomial derivative() const {
        if (coeffs_.size() <= 1) return Polynomial(std::vector<double>{0.0});
        std::vector<double> d(coeffs_.size() - 1);
        for (std::size_t j = 1; j < coeffs_.size(); ++j) d[j - 1] = static_cast<double>(j) * coeffs_[j];
        return Polynomial(std::move(d));
    }

    Polynomial& operator+=(const Polynomial& o) {
        if (o.coeffs_.size() > coeffs_.size()) coeffs_.resize(o.coeffs_.size(), 0.0);
        for (std::size_t j = 0; j < o.coeffs_.size(); ++j) coeffs_[j] += o.coeffs_[j];
        return *this;
    }

    Polynomial& operator-=(const Polynomial& o) {
        if (o.coeffs_.size() > coeffs_.size()) coeffs_.resize(o.coeffs_.size(), 0.0);
        for (std::size_t j = 0; j < o.coeffs_.size(); ++j) coeffs_[j] -= o.coeffs_[j];
        return *this;
    }

    Polynomial& operator*=(double a) {
        for (auto& c : coeffs_) c *= a;
        return *this;
    }

    friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
    friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
    friend Polynomial operator*(Polynomial a, double s) { return a *= s; }
    friend Polynomial operator*(double s, Polynomial a) { return a *= s; }

    friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
        if (a.coeffs_.empty() || b.coeffs_.empty()) return Polynomial();
        std::vector<double> out(a.coeffs_.size() + b.coeffs_.size() - 1, 0.0);
        for (std::size_t i = 0; i < a.coeffs_.size(); ++i)
            for (std::size_t j = 0; j < b.coeffs_.size(); ++j) out[i + j] += a.coeffs_[i] * b.coeffs_[j];
        return Polynomial(std::move(out));
    }

private:
    std::vector<double> coeffs_;
};

// Complete Bell polynomial B_k(x_1..x_k) through
//   B_{n+1} = sum_{j=0}^{n} C(n,j) B_{n-j} x_{j+1},  B_0 = 1.
// T only needs T(double), T + T and T * T / double * T, so the same routine
// runs on scalars and on polynomials in an auxiliary variable.
template <class T>
T complete_bell(std::span<const T> x) {
    const std::size_t k = x.size();
    std::vector<T> B;
    B.reserve(k + 1);
    B.emplace_back(1.0);
    std::vector<double> binom{1.0}; // row n of Pascal's triangle
    for (std::size_t n = 0; n < k; ++n) {
        T next(0.0);
        for (std::size_t j = 0; j <= n; ++j) next = next + binom[j] * (B[n - j] * x[j]);
        B.push_back(std::move(next));
        std::vector<double> row(n + 2, 1.0);
        for (std::size_t j = 1; j <= n; ++j) row[j] = binom[j - 1] + binom[j];
        binom = std::move(row);
    }
    return B.back();
}

inline double complete_bell(std::initializer_list<double> x) {
    return complete_bell<double>(std::span<const double>(x.begin(), x.size()));
}

// g(t) = e^{-decay t} * poly(t).
struct PolyExpForm {
    double decay = 0.0;
    Polynomial poly;

    // Evaluated term by term in log space so large decay * t does not
    // underflow before the polynomial is applied.
    double operator()(double t) const {
        const auto& c = poly.coeffs();
        if (t == 0.0) return poly.coeff(0);
        if (t < 0.0) return std::exp(-decay * t) * poly(t);
        const double logt = std::log(t);
        double acc = 0.0;
        for (std::size_t j = 0; j < c.size(); ++j) {
            if (c[j] == 0.0) continue;
            const double mag = std::exp(std::log(std::fabs(c[j])) + static_cast<double>(j) * logt - decay * t);
            acc += c[j] > 0.0 ? mag : -mag;
        }
        return acc;
    }

    // d/dt [e^{-ct} P(t)] = e^{-ct} (P'(t) - c P(t)).
    PolyExpForm derivative() const { return PolyExpForm{decay, poly.derivative() - decay * poly}; }

    // \int_0^inf e^{-ct} t^j dt = j!/c^{j+1}.
    double integral_to_infinity() const {
        if (!(decay > 0.0)) throw DomainError("integral_to_infinity needs a positive decay rate");
        const auto& c = poly.coeffs();
        double acc = 0.0;
        for (std::size_t j = 0; j < c.size(); ++j) {
            if (c[j] == 0.0) continue;
            const double jd = static_cast<double>(j);
            const double mag = std::exp(std::lgamma(jd + 1.0) - (jd + 1.0) * std::log(decay));
            acc += c[j] * mag;
        }
        return acc;
    }
};

inline PolyExpForm operator+(PolyExpForm a, const PolyExpForm& b) {
    if (a.decay != b.decay) throw ContractError("adding PolyExpForms with different decay rates");
    a.poly += b.poly;
    return a;
}

inline PolyExpForm operator-(PolyExpForm a, const PolyExpForm& b) {
    if (a.decay != b.decay) throw ContractError("subtracting PolyExpForms with different decay rates");
    a.poly -= b.poly;
    return a;
}

inline PolyExpForm operator*(double s, PolyExpForm a) {
    a.poly *= s;
    return a;
}

// Polynomial parts P_0..P_K of a compound Poisson law with jump-size rates
// rates[1..K]: p_k(t) = e^{-decay t} P_k(t). Normalized Bell recurrence
//   k P_k = t * sum_{j=1}^{k} j rates[j] P_{k-j},  P_0 = 1,
// which keeps every coefficient nonnegative.
inline std::vector<Polynomial> compound_polynomials(std::span<const double> rates, int K) {
    if (K < 0) throw DomainError("compound_polynomials needs K >= 0");
    if (static_cast<int>(rates.size()) <= K) throw ContractError("rates table shorter than K + 1");
    std::vector<Polynomial> P;
    P.reserve(static_cast<std::size_t>(K) + 1);
    P.emplace_back(std::vector<double>{1.0});
    for (int k = 1; k <= K; ++k) {
        std::vector<double> c(static_cast<std::size_t>(k) + 1, 0.0);
        for (int j = 1; j <= k; ++j) {
            const double w = j * rates[j];
            if (w == 0.0) continue;
            const auto& prev = P[k - j].coeffs();
            for (std::size_t d = 0; d < prev.size(); ++d) c[d + 1] += w * prev[d];
        }
        for (auto& v : c) v /= k;
        P.emplace_back(std::move(c));
    }
    return P;
}

} // namespace subpois
