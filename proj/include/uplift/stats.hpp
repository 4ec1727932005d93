#pragma once

#include <span>

namespace uplift::stats {

double mean(std::span<const double> v);
double sample_variance(std::span<const double> v);
double pearson(std::span<const double> a, std::span<const double> b);
// Rank correlation with average ranks on ties.
double spearman(std::span<const double> a, std::span<const double> b);

struct TTest {
    double t = 0.0;
    double p = 1.0;
    int dof = 0;
};

// One-sided paired test of mean(a - b) > 0.
TTest paired_one_sided(std::span<const double> a, std::span<const double> b);

}  // namespace uplift::stats
