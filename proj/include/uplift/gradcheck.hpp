#pragma once

// Test-support oracle. Central finite differences of a scalar function; it
// only ever evaluates loss values, so it stays independent of every analytic
// gradient path it is used to check.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace uplift::testsupport {

// f: (const std::vector<double>&) -> double
template <typename F>
std::vector<double> central_diff(F&& f, std::vector<double> x, double h = 1e-6) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double xi = x[i];
        x[i] = xi + h;
        const double fp = f(x);
        x[i] = xi - h;
        const double fm = f(x);
        x[i] = xi;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

// Worst per-coordinate relative error with an absolute floor so near-zero
// coordinates compare on an absolute scale.
inline double max_rel_err(std::span<const double> a, std::span<const double> b,
                          double floor = 1e-3) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double denom = std::max({floor, std::abs(a[i]), std::abs(b[i])});
        worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
    }
    return worst;
}

}  // namespace uplift::testsupport
