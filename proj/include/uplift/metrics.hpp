#pragma once

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "uplift/types.hpp"

namespace uplift {

// One scored, propensity-weighted observation. Samples below the top level
// join the treatment-side set scored at their own upgrade step; samples above
// the bottom level join the control-side set scored one step down, so middle
// levels appear once in each set.
struct Quintuple {
    std::size_t index = 0;
    int treatment = 0;
    double wreward = 0.0;  // (N / N_t) * y^r
    double wcost = 0.0;    // (N / N_t) * y^c
    double score = 0.0;
    bool treat_side = false;
};

// scores is n x (L-1) row-major, one column per upgrade step.
// Requires every level non-empty.
std::vector<Quintuple> build_quintuples(const RctDataset& ds,
                                        std::span<const double> scores);

// Binary convention for the 2-level curves: treated samples form the
// treatment side, controls the control side, both scored by the same column.
std::vector<Quintuple> binary_quintuples(const RctDataset& ds,
                                         std::span<const double> scores);

struct CurvePoint {
    double x = 0.0;
    double y = 0.0;
};

// Normalized cost curve. Points are prefix statistics of the score-descending
// order (ties pooled into one point), divided by the endpoint, so the curve
// ends at (1, 1) and the random chord has area 1/2.
struct CostCurve {
    std::vector<CurvePoint> points;
    double end_cost = 0.0;    // raw endpoint before normalization
    double end_reward = 0.0;
    double area_model = 0.0;  // trapezoid area of the normalized curve in cost order
    double area_random = 0.5;
    bool normalized = true;
};

enum class CurveAxis { cost, fraction };

CostCurve cost_curve(std::vector<Quintuple> qs, CurveAxis axis = CurveAxis::cost);

inline CostCurve mt_cost_curve(std::vector<Quintuple> qs) {
    return cost_curve(std::move(qs), CurveAxis::cost);
}

// area_model / (2 * area_random); MetricError when the baseline area is not
// positive (non-positive total uplift).
double mt_aucc(const CostCurve& curve);

// 2-level specializations sharing the same curve machinery.
double aucc(const RctDataset& ds, std::span<const double> roi_scores);
double auuc(const RctDataset& ds, std::span<const double> uplift_scores);

struct PolicyTable {
    std::vector<int> level;  // assigned level per individual
};

// Inverse-propensity estimate of a policy's expected (reward, cost) on trial
// data: (1/N) sum over samples with t_i == policy(i) of (N / N_{t_i}) * y_i.
std::pair<double, double> eom(const RctDataset& ds, const PolicyTable& policy);

struct SweepPoint {
    double budget = 0.0;
    double eom_reward = 0.0;
    double eom_cost = 0.0;
    double consumed = 0.0;
    bool feasible = true;
};

// Solves each budget with the supplied allocator, converts the allocation to
// a policy and scores it with eom. Infeasible budgets are flagged and the
// sweep continues.
std::vector<SweepPoint> budget_sweep(const RctDataset& ds,
                                     const std::function<Allocation(double)>& solve_at,
                                     std::span<const double> budgets);

}  // namespace uplift
