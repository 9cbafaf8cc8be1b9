#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace nos::testing {

// Banded DTW by memoized recursion, independent of the rolling-row DP.
inline double dtw_oracle(const std::vector<double>& x, const std::vector<double>& y, std::size_t w) {
    const std::size_t n = x.size(), m = y.size();
    std::vector<double> memo(n * m, -1.0);
    std::function<double(std::size_t, std::size_t)> D = [&](std::size_t i, std::size_t j) -> double {
        const std::size_t d = i > j ? i - j : j - i;
        if (d > w) return std::numeric_limits<double>::infinity();
        double& slot = memo[i * m + j];
        if (slot >= 0) return slot;
        double best = (i == 0 && j == 0) ? 0.0 : std::numeric_limits<double>::infinity();
        if (i > 0) best = std::min(best, D(i - 1, j));
        if (j > 0) best = std::min(best, D(i, j - 1));
        if (i > 0 && j > 0) best = std::min(best, D(i - 1, j - 1));
        return slot = std::abs(x[i] - y[j]) + best;
    };
    return D(n - 1, m - 1);
}

}  // namespace nos::testing
