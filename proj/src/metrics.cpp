#include "uplift/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "uplift/errors.hpp"
#include "uplift/parallel.hpp"

namespace uplift {

namespace {

void require_all_levels(const RctDataset& ds) {
    for (int j = 0; j < ds.n_levels(); ++j)
        if (ds.counts()[static_cast<std::size_t>(j)] == 0)
            throw MetricError("treatment level " + std::to_string(j) + " is empty");
}

}  // namespace

std::vector<Quintuple> build_quintuples(const RctDataset& ds,
                                        std::span<const double> scores) {
    const int L = ds.n_levels();
    const std::size_t heads = static_cast<std::size_t>(L - 1);
    if (scores.size() != ds.total() * heads)
        throw MetricError("score matrix has wrong shape");
    require_all_levels(ds);
    const double n = static_cast<double>(ds.total());
    std::vector<Quintuple> qs;
    qs.reserve(ds.total() * 2 - ds.counts().front() - ds.counts().back());
    for (std::size_t i = 0; i < ds.total(); ++i) {
        const int t = ds.treatment(i);
        const double w = n / static_cast<double>(ds.counts()[static_cast<std::size_t>(t)]);
        if (t < L - 1)
            qs.push_back({i, t, w * ds.reward(i), w * ds.cost(i),
                          scores[i * heads + static_cast<std::size_t>(t)], true});
        if (t > 0)
            qs.push_back({i, t, w * ds.reward(i), w * ds.cost(i),
                          scores[i * heads + static_cast<std::size_t>(t - 1)], false});
    }
    return qs;
}

std::vector<Quintuple> binary_quintuples(const RctDataset& ds,
                                         std::span<const double> scores) {
    if (ds.n_levels() != 2) throw MetricError("binary curve needs a 2-level dataset");
    if (scores.size() != ds.total()) throw MetricError("score vector has wrong length");
    require_all_levels(ds);
    const double n = static_cast<double>(ds.total());
    std::vector<Quintuple> qs;
    qs.reserve(ds.total());
    for (std::size_t i = 0; i < ds.total(); ++i) {
        const int t = ds.treatment(i);
        const double w = n / static_cast<double>(ds.counts()[static_cast<std::size_t>(t)]);
        qs.push_back({i, t, w * ds.reward(i), w * ds.cost(i), scores[i], t == 1});
    }
    return qs;
}

CostCurve cost_curve(std::vector<Quintuple> qs, CurveAxis axis) {
    if (qs.empty()) throw MetricError("no quintuples");
    std::sort(qs.begin(), qs.end(), [](const Quintuple& a, const Quintuple& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.index != b.index) return a.index < b.index;
        return a.treat_side && !b.treat_side;
    });

    const double total = static_cast<double>(qs.size());
    double tr = 0.0, tc = 0.0, cr = 0.0, cc = 0.0;
    std::size_t nt = 0, nc = 0;
    std::vector<CurvePoint> raw;
    raw.reserve(qs.size());
    for (std::size_t k = 0; k < qs.size(); ++k) {
        const Quintuple& q = qs[k];
        if (q.treat_side) {
            tr += q.wreward;
            tc += q.wcost;
            ++nt;
        } else {
            cr += q.wreward;
            cc += q.wcost;
            ++nc;
        }
        // Ties pool into one point: only the last element of a score block
        // emits, so equal scores collapse to the chord exactly.
        if (k + 1 < qs.size() && qs[k + 1].score == q.score) continue;
        if (nt == 0 || nc == 0) continue;  // prefix undefined, skip
        const double frac = static_cast<double>(k + 1) / total;
        const double dy_r = frac * (tr / static_cast<double>(nt) - cr / static_cast<double>(nc));
        const double dy_c = frac * (tc / static_cast<double>(nt) - cc / static_cast<double>(nc));
        raw.push_back({axis == CurveAxis::cost ? dy_c : frac, dy_r});
    }
    if (raw.empty()) throw MetricError("curve has no defined points");

    CostCurve curve;
    const CurvePoint end = raw.back();
    curve.end_reward = end.y;
    curve.end_cost = end.x;  // population fraction (= 1) for the fraction axis
    const double raw_chord = 0.5 * end.x * end.y;
    if (!(raw_chord > 0.0)) {
        // Non-positive total uplift: keep the raw points, leave the baseline
        // area non-positive so the area ratio reports a metric-domain error.
        curve.points = std::move(raw);
        curve.area_random = raw_chord;
        curve.normalized = false;
        return curve;
    }

    for (CurvePoint& p : raw) {
        p.x /= end.x;
        p.y /= end.y;
    }

    // Trapezoid area in cost order from the implicit origin.
    std::vector<CurvePoint> by_x = raw;
    std::stable_sort(by_x.begin(), by_x.end(),
                     [](const CurvePoint& a, const CurvePoint& b) { return a.x < b.x; });
    double area = 0.0;
    CurvePoint prev{0.0, 0.0};
    for (const CurvePoint& p : by_x) {
        area += (p.x - prev.x) * 0.5 * (p.y + prev.y);
        prev = p;
    }
    curve.area_model = area;
    curve.area_random = 0.5;
    curve.normalized = true;

    // Stored curve is thinned to roughly percentile resolution for large
    // inputs; the areas above always use the full walk.
    if (raw.size() > 10000) {
        std::vector<CurvePoint> thin;
        thin.reserve(128);
        double next_x = 0.01;
        for (const CurvePoint& p : by_x) {
            if (p.x >= next_x) {
                thin.push_back(p);
                while (next_x <= p.x) next_x += 0.01;
            }
        }
        if (thin.empty() || thin.back().x != raw.back().x || thin.back().y != raw.back().y)
            thin.push_back(raw.back());
        curve.points = std::move(thin);
    } else {
        curve.points = std::move(raw);
    }
    return curve;
}

double mt_aucc(const CostCurve& curve) {
    if (!(curve.area_random > 0.0))
        throw MetricError("non-positive baseline area; total uplift must be positive");
    return curve.area_model / (2.0 * curve.area_random);
}

double aucc(const RctDataset& ds, std::span<const double> roi_scores) {
    return mt_aucc(cost_curve(binary_quintuples(ds, roi_scores), CurveAxis::cost));
}

double auuc(const RctDataset& ds, std::span<const double> uplift_scores) {
    return mt_aucc(cost_curve(binary_quintuples(ds, uplift_scores), CurveAxis::fraction));
}

std::pair<double, double> eom(const RctDataset& ds, const PolicyTable& policy) {
    if (policy.level.size() != ds.total()) throw MetricError("policy has wrong length");
    const int L = ds.n_levels();
    for (const int lv : policy.level) {
        if (lv < 0 || lv >= L) throw MetricError("policy level out of range");
        if (ds.counts()[static_cast<std::size_t>(lv)] == 0)
            throw MetricError("policy assigns empty treatment level " + std::to_string(lv));
    }
    const auto sums = par::block_sum_arr<2>(ds.total(), [&](std::size_t i) {
        const int t = ds.treatment(i);
        if (t != policy.level[i]) return std::array<double, 2>{0.0, 0.0};
        const double inv = 1.0 / static_cast<double>(ds.counts()[static_cast<std::size_t>(t)]);
        return std::array<double, 2>{ds.reward(i) * inv, ds.cost(i) * inv};
    });
    return {sums[0], sums[1]};
}

std::vector<SweepPoint> budget_sweep(const RctDataset& ds,
                                     const std::function<Allocation(double)>& solve_at,
                                     std::span<const double> budgets) {
    double prev = -1.0;
    for (const double b : budgets) {
        if (b < 0.0 || b < prev)
            throw MetricError("budgets must be non-negative and ascending");
        prev = b;
    }
    std::vector<SweepPoint> out;
    out.reserve(budgets.size());
    for (const double b : budgets) {
        SweepPoint pt;
        pt.budget = b;
        try {
            const Allocation alloc = solve_at(b);
            pt.consumed = alloc.consumed_cost;
            const auto [er, ec] = eom(ds, PolicyTable{alloc.chosen});
            pt.eom_reward = er;
            pt.eom_cost = ec;
        } catch (const InfeasibleError&) {
            pt.feasible = false;
        }
        out.push_back(pt);
    }
    return out;
}

}  // namespace uplift
