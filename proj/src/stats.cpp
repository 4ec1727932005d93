#include "uplift/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numeric>
#include <vector>

#include "uplift/errors.hpp"

namespace uplift::stats {

double mean(std::span<const double> v) {
    if (v.empty()) throw Error("mean of empty span");
    double acc = 0.0;
    for (const double x : v) acc += x;
    return acc / static_cast<double>(v.size());
}

double sample_variance(std::span<const double> v) {
    if (v.size() < 2) throw Error("variance needs at least 2 values");
    const double m = mean(v);
    double acc = 0.0;
    for (const double x : v) acc += (x - m) * (x - m);
    return acc / static_cast<double>(v.size() - 1);
}

double pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) throw Error("pearson needs matched spans");
    const double ma = mean(a), mb = mean(b);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) throw Error("pearson undefined for constant input");
    return sab / std::sqrt(saa * sbb);
}

namespace {
std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> rank(v.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
        i = j + 1;
    }
    return rank;
}
}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
    const std::vector<double> ra = average_ranks(a);
    const std::vector<double> rb = average_ranks(b);
    return pearson(ra, rb);
}

TTest paired_one_sided(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) throw Error("paired test needs matched spans");
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    const double m = mean(d);
    const double sd = std::sqrt(sample_variance(d));
    TTest out;
    out.dof = static_cast<int>(a.size()) - 1;
    if (sd == 0.0) {
        out.t = m > 0.0 ? std::numeric_limits<double>::infinity()
                        : (m < 0.0 ? -std::numeric_limits<double>::infinity() : 0.0);
        out.p = m > 0.0 ? 0.0 : 1.0;
        return out;
    }
    out.t = m / (sd / std::sqrt(static_cast<double>(a.size())));
    const boost::math::students_t dist(out.dof);
    out.p = boost::math::cdf(boost::math::complement(dist, out.t));
    return out;
}

}  // namespace uplift::stats
