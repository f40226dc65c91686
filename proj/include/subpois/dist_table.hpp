#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "subpois/errors.hpp"

namespace subpois {

// Finite pmf on {0..K} plus an upper bound on the mass beyond K.
struct DistTable {
    std::vector<double> probs;
    double tail_bound = 0.0;
    bool tail_certified = false;

    int support_max() const noexcept { return static_cast<int>(probs.size()) - 1; }

    double at(int k) const noexcept {
        return (k >= 0 && k < static_cast<int>(probs.size())) ? probs[static_cast<std::size_t>(k)] : 0.0;
    }

    double mass() const noexcept { return std::accumulate(probs.begin(), probs.end(), 0.0); }

    // Sum + tail bound brackets one.
    bool normalized(double tol = 1e-9) const noexcept {
        const double m = mass();
        return m <= 1.0 + tol && m + tail_bound >= 1.0 - tol;
    }
};

// Tail of a proper distribution from the missing mass, widened by a rounding
// allowance proportional to the number of summed terms.
inline double missing_mass_bound(const std::vector<double>& probs) {
    const double m = std::accumulate(probs.begin(), probs.end(), 0.0);
    return std::max(0.0, 1.0 - m) + 4e-16 * static_cast<double>(probs.size());
}

} // namespace subpois
