#pragma once

#include <span>
#include <utility>
#include <vector>

#include "uplift/types.hpp"

namespace uplift {

// Per-individual response matrices with strictly increasing levels
// (validated on construction) and non-negative level-0 cost.
class MultiTreatmentInstance {
public:
    MultiTreatmentInstance(std::vector<double> r, std::vector<double> c,
                           std::size_t individuals, int levels);

    std::size_t individuals() const { return m_; }
    int levels() const { return levels_; }
    double r(std::size_t i, int j) const {
        return r_[i * static_cast<std::size_t>(levels_) + static_cast<std::size_t>(j)];
    }
    double c(std::size_t i, int j) const {
        return c_[i * static_cast<std::size_t>(levels_) + static_cast<std::size_t>(j)];
    }
    const std::vector<double>& rewards() const { return r_; }
    const std::vector<double>& costs() const { return c_; }

private:
    std::vector<double> r_, c_;
    std::size_t m_ = 0;
    int levels_ = 2;
};

// Per-step marginal utilities ell[i][h] = (r_{i,h+1}-r_{i,h})/(c_{i,h+1}-c_{i,h}),
// h = 0..L-2, with a per-row flag for the diminishing-utility assumption.
struct MarginalTable {
    std::vector<double> ell;  // M x (L-1) row-major
    std::size_t individuals = 0;
    int levels = 2;
    std::vector<char> monotone_ok;
    int clamped_denominators = 0;

    double at(std::size_t i, int h) const {
        return ell[i * static_cast<std::size_t>(levels - 1) + static_cast<std::size_t>(h)];
    }
    bool all_monotone() const;
    double max_ell() const;
};

MarginalTable compute_marginals(const MultiTreatmentInstance& inst);

// Wraps predicted utilities (monotonicity is evaluated, not enforced).
MarginalTable make_marginal_table(std::vector<double> ell, std::size_t individuals,
                                  int levels);

// Non-increasing isotonic projection per row (pool adjacent violators).
// Returns the repaired table and the count of rows that changed.
std::pair<MarginalTable, int> isotonic_repair(const MarginalTable& table);

// Greedy 0/1 assignment: rank by tau_r/tau_c descending (stable by index),
// treat while affordable, skipping individuals that would overshoot and
// continuing down the list. Requires tau_c > 0.
Allocation greedy_btap(std::span<const double> tau_r, std::span<const double> tau_c,
                       double budget);

// Same walk ranked by an external score; costs/rewards only account.
Allocation greedy_by_score(std::span<const double> score, std::span<const double> tau_c,
                           std::span<const double> tau_r, double budget);

struct OracleResult {
    double objective = 0.0;
    std::vector<int> chosen;  // 0/1 for the binary problem, level otherwise
};

// Exact optimum of the binary problem by branch-and-prune enumeration (n <= 25).
OracleResult knapsack_oracle(std::span<const double> tau_r, std::span<const double> tau_c,
                             double budget);

// Exact optimum via dynamic programming over costs quantized to `grid`;
// costs must already lie on the grid.
OracleResult knapsack_oracle_dp(std::span<const double> tau_r,
                                std::span<const double> tau_c, double budget,
                                double grid);

// Exact optimum of the multiple-choice problem: enumeration when L^M is
// small, otherwise grid DP (grid > 0, costs must lie on the grid).
OracleResult mckp_oracle(const MultiTreatmentInstance& inst, double budget,
                         double grid = 0.0);

struct DualSearchResult {
    Allocation allocation;
    double alpha_star = 0.0;  // alpha of the returned allocation, within [lo, hi]
    double alpha_lo = 0.0;
    double alpha_hi = 0.0;
    double epsilon = 0.0;
    int iterations = 0;
    bool tolerance_met = false;
};

// One dual decision at multiplier alpha: argmax_j r_{ij} - alpha c_{ij},
// smallest j on ties.
std::vector<int> dual_decision_argmax(const std::vector<double>& r,
                                      const std::vector<double>& c,
                                      std::size_t individuals, int levels, double alpha);

// Comparison-only equivalent: the level equals the number of per-step
// utilities strictly above alpha (sentinels +inf / 0 fall out of the count).
std::vector<int> dual_decision_marginal(const MarginalTable& table, double alpha);

// Bisection on alpha over [0, max ell] until 0 <= B - consumed <= epsilon or
// 64 iterations; returns the tightest feasible allocation found.
DualSearchResult lagrangian_mtbap(const MultiTreatmentInstance& inst, double budget,
                                  double epsilon);

// The same search driven purely by utility comparisons. Every row must be
// non-increasing or the equivalence guarantee is void (DomainError).
// `rewards` is optional accounting only; without it objective stays 0.
DualSearchResult threshold_mtbap(const MarginalTable& table,
                                  const std::vector<double>& costs, double budget,
                                  double epsilon,
                                  const std::vector<double>* rewards = nullptr);

// Dual search on arbitrary (possibly non-monotone) prediction matrices; the
// upper bracket grows by doubling until feasible. When `accounting` is given,
// decisions still rank by (r, c) but consumption and the budget test use the
// accounting matrix, as do objective and consumed_cost.
DualSearchResult lagrangian_allocate(const std::vector<double>& r,
                                     const std::vector<double>& c,
                                     std::size_t individuals, int levels, double budget,
                                     double epsilon,
                                     const std::vector<double>* accounting = nullptr,
                                     const std::vector<double>* accounting_rewards = nullptr);

// Dual objective alpha * B + sum_i max_j (r_{ij} - alpha c_{ij}).
double dual_objective(const MultiTreatmentInstance& inst, double budget, double alpha);

}  // namespace uplift
