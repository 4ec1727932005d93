#include "uplift/solve.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>

#include "uplift/errors.hpp"
#include "uplift/parallel.hpp"

namespace uplift {

namespace {

constexpr double kDenomFloor = 1e-9;
constexpr int kSearchCap = 64;

// Non-increasing within a relative slack: last-bit wobble in the quotients
// must not flag a mathematically monotone row.
bool violates_monotone(double prev, double next) {
    return next > prev + 1e-9 * std::max(1.0, std::abs(prev));
}

double consumed_cost(const std::vector<double>& c, int levels,
                     const std::vector<int>& chosen) {
    return par::block_sum(chosen.size(), [&](std::size_t i) {
        return c[i * static_cast<std::size_t>(levels) +
                 static_cast<std::size_t>(chosen[i])];
    });
}

double reward_sum(const std::vector<double>& r, int levels, const std::vector<int>& chosen) {
    return par::block_sum(chosen.size(), [&](std::size_t i) {
        return r[i * static_cast<std::size_t>(levels) +
                 static_cast<std::size_t>(chosen[i])];
    });
}

// Shared bisection. `decide` must consume weakly less as alpha grows and the
// decision at alpha_hi must already be feasible.
DualSearchResult dual_search(const std::function<std::vector<int>(double)>& decide,
                             const std::vector<double>& c,
                             const std::vector<double>* r, int levels, double budget,
                             double epsilon, double alpha_hi) {
    DualSearchResult res;
    res.alpha_lo = 0.0;
    res.alpha_hi = alpha_hi;
    res.epsilon = epsilon;

    // The reported (lo, alpha, hi) snapshot the search state at the moment
    // the returned allocation was adopted, so alpha_star always sits inside
    // its own bracket.
    auto finish = [&](std::vector<int> z, double cons, double alpha, double lo,
                      double hi, bool met) {
        res.allocation.chosen = std::move(z);
        res.allocation.consumed_cost = cons;
        res.allocation.objective =
            r ? reward_sum(*r, levels, res.allocation.chosen) : 0.0;
        res.alpha_star = alpha;
        res.alpha_lo = lo;
        res.alpha_hi = hi;
        res.tolerance_met = met;
        return res;
    };

    // Unconstrained check first: if alpha = 0 fits, it is optimal.
    std::vector<int> z0 = decide(0.0);
    double cons0 = consumed_cost(c, levels, z0);
    if (cons0 <= budget)
        return finish(std::move(z0), cons0, 0.0, 0.0, alpha_hi,
                      budget - cons0 <= epsilon);

    std::vector<int> best = decide(alpha_hi);
    double best_cons = consumed_cost(c, levels, best);
    double best_alpha = alpha_hi, best_lo = 0.0, best_hi = alpha_hi;
    if (best_cons > budget)
        throw InfeasibleError("budget below the cheapest feasible allocation");
    if (budget - best_cons <= epsilon)
        return finish(std::move(best), best_cons, best_alpha, best_lo, best_hi, true);

    double lo = 0.0, hi = alpha_hi;
    for (int it = 0; it < kSearchCap; ++it) {
        ++res.iterations;
        const double alpha = 0.5 * (lo + hi);
        std::vector<int> z = decide(alpha);
        const double cons = consumed_cost(c, levels, z);
        if (cons <= budget) {
            hi = alpha;
            if (cons > best_cons) {  // first alpha reaching this consumption
                best = std::move(z);
                best_cons = cons;
                best_alpha = alpha;
                best_lo = lo;
                best_hi = hi;
            }
            if (budget - cons <= epsilon)
                return finish(std::move(best), best_cons, best_alpha, best_lo,
                              best_hi, true);
        } else {
            lo = alpha;
        }
    }
    return finish(std::move(best), best_cons, best_alpha, best_lo, best_hi, false);
}

}  // namespace

MultiTreatmentInstance::MultiTreatmentInstance(std::vector<double> r, std::vector<double> c,
                                               std::size_t individuals, int levels)
    : r_(std::move(r)), c_(std::move(c)), m_(individuals), levels_(levels) {
    if (levels_ < 2) throw DomainError("instance needs at least 2 levels");
    const std::size_t want = m_ * static_cast<std::size_t>(levels_);
    if (r_.size() != want || c_.size() != want)
        throw DomainError("instance matrices have wrong shape");
    for (std::size_t i = 0; i < m_; ++i) {
        if (this->c(i, 0) < 0.0)
            throw DomainError("negative level-0 cost at row " + std::to_string(i));
        for (int j = 0; j + 1 < levels_; ++j) {
            if (!(this->r(i, j) < this->r(i, j + 1)))
                throw DomainError("rewards not strictly increasing at row " +
                                  std::to_string(i));
            if (!(this->c(i, j) < this->c(i, j + 1)))
                throw DomainError("costs not strictly increasing at row " +
                                  std::to_string(i));
        }
    }
}

bool MarginalTable::all_monotone() const {
    for (const char ok : monotone_ok)
        if (!ok) return false;
    return true;
}

double MarginalTable::max_ell() const {
    double best = 0.0;
    for (const double v : ell) best = std::max(best, v);
    return best;
}

MarginalTable compute_marginals(const MultiTreatmentInstance& inst) {
    MarginalTable t;
    t.individuals = inst.individuals();
    t.levels = inst.levels();
    const int heads = t.levels - 1;
    t.ell.resize(t.individuals * static_cast<std::size_t>(heads));
    t.monotone_ok.assign(t.individuals, 1);
    int clamped = 0;
    for (std::size_t i = 0; i < t.individuals; ++i) {
        for (int h = 0; h < heads; ++h) {
            double denom = inst.c(i, h + 1) - inst.c(i, h);
            if (denom < kDenomFloor) {
                denom = kDenomFloor;
                ++clamped;
            }
            t.ell[i * static_cast<std::size_t>(heads) + static_cast<std::size_t>(h)] =
                (inst.r(i, h + 1) - inst.r(i, h)) / denom;
        }
        for (int h = 1; h < heads; ++h)
            if (violates_monotone(t.at(i, h - 1), t.at(i, h))) t.monotone_ok[i] = 0;
    }
    t.clamped_denominators = clamped;
    return t;
}

MarginalTable make_marginal_table(std::vector<double> ell, std::size_t individuals,
                                  int levels) {
    if (levels < 2) throw DomainError("marginal table needs at least 2 levels");
    if (ell.size() != individuals * static_cast<std::size_t>(levels - 1))
        throw DomainError("marginal table has wrong shape");
    for (const double v : ell)
        if (!std::isfinite(v)) throw DomainError("non-finite marginal utility");
    MarginalTable t;
    t.ell = std::move(ell);
    t.individuals = individuals;
    t.levels = levels;
    t.monotone_ok.assign(individuals, 1);
    const int heads = levels - 1;
    for (std::size_t i = 0; i < individuals; ++i)
        for (int h = 1; h < heads; ++h)
            if (violates_monotone(t.at(i, h - 1), t.at(i, h))) t.monotone_ok[i] = 0;
    return t;
}

std::pair<MarginalTable, int> isotonic_repair(const MarginalTable& table) {
    MarginalTable out = table;
    const int heads = table.levels - 1;
    int repaired = 0;
    std::vector<double> pool_val(static_cast<std::size_t>(heads));
    std::vector<int> pool_len(static_cast<std::size_t>(heads));
    for (std::size_t i = 0; i < table.individuals; ++i) {
        if (table.monotone_ok[i]) continue;
        ++repaired;
        // PAVA for a non-increasing fit under squared loss.
        int stack = 0;
        for (int h = 0; h < heads; ++h) {
            double v = table.at(i, h);
            int len = 1;
            while (stack > 0 && pool_val[static_cast<std::size_t>(stack - 1)] < v) {
                // merge pools that violate the non-increasing order
                v = (v * len + pool_val[static_cast<std::size_t>(stack - 1)] *
                                   pool_len[static_cast<std::size_t>(stack - 1)]) /
                    (len + pool_len[static_cast<std::size_t>(stack - 1)]);
                len += pool_len[static_cast<std::size_t>(stack - 1)];
                --stack;
            }
            pool_val[static_cast<std::size_t>(stack)] = v;
            pool_len[static_cast<std::size_t>(stack)] = len;
            ++stack;
        }
        int h = 0;
        for (int p = 0; p < stack; ++p)
            for (int k = 0; k < pool_len[static_cast<std::size_t>(p)]; ++k, ++h)
                out.ell[i * static_cast<std::size_t>(heads) + static_cast<std::size_t>(h)] =
                    pool_val[static_cast<std::size_t>(p)];
        out.monotone_ok[i] = 1;
    }
    return {std::move(out), repaired};
}

Allocation greedy_btap(std::span<const double> tau_r, std::span<const double> tau_c,
                       double budget) {
    if (tau_r.size() != tau_c.size()) throw DomainError("tau vectors differ in length");
    if (budget < 0.0) throw DomainError("budget must be >= 0");
    for (const double c : tau_c)
        if (!(c > 0.0)) throw DomainError("tau_c must be strictly positive");
    std::vector<double> ratio(tau_r.size());
    for (std::size_t i = 0; i < tau_r.size(); ++i) ratio[i] = tau_r[i] / tau_c[i];
    return greedy_by_score(ratio, tau_c, tau_r, budget);
}

Allocation greedy_by_score(std::span<const double> score, std::span<const double> tau_c,
                           std::span<const double> tau_r, double budget) {
    const std::size_t n = score.size();
    if (tau_c.size() != n || tau_r.size() != n)
        throw DomainError("score/cost/reward lengths differ");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (score[a] != score[b]) return score[a] > score[b];
        return a < b;
    });
    Allocation alloc;
    alloc.chosen.assign(n, 0);
    double remaining = budget;
    for (const std::size_t i : order) {
        if (tau_c[i] <= remaining) {
            alloc.chosen[i] = 1;
            remaining -= tau_c[i];
            alloc.consumed_cost += tau_c[i];
            alloc.objective += tau_r[i];
        }
        // else skip and keep walking down the list
    }
    return alloc;
}

OracleResult knapsack_oracle(std::span<const double> tau_r, std::span<const double> tau_c,
                             double budget) {
    const std::size_t n = tau_r.size();
    if (n > 25) throw CapacityError("enumeration oracle limited to n <= 25");
    if (tau_c.size() != n) throw DomainError("tau vectors differ in length");
    OracleResult best;
    best.chosen.assign(n, 0);
    std::vector<int> cur(n, 0);
    // Depth-first include/exclude with budget pruning; include explored first
    // so ties resolve deterministically.
    std::function<void(std::size_t, double, double)> walk = [&](std::size_t i, double cost,
                                                                double value) {
        if (i == n) {
            if (value > best.objective) {
                best.objective = value;
                best.chosen = cur;
            }
            return;
        }
        if (cost + tau_c[i] <= budget) {
            cur[i] = 1;
            walk(i + 1, cost + tau_c[i], value + tau_r[i]);
            cur[i] = 0;
        }
        walk(i + 1, cost, value);
    };
    walk(0, 0.0, 0.0);
    return best;
}

OracleResult knapsack_oracle_dp(std::span<const double> tau_r,
                                std::span<const double> tau_c, double budget,
                                double grid) {
    const std::size_t n = tau_r.size();
    if (!(grid > 0.0)) throw CapacityError("dp oracle needs a positive cost grid");
    std::vector<long long> w(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double q = tau_c[i] / grid;
        w[i] = std::llround(q);
        if (std::abs(q - static_cast<double>(w[i])) > 1e-9)
            throw CapacityError("cost not on the given grid at item " + std::to_string(i));
    }
    const long long W = static_cast<long long>(std::floor(budget / grid + 1e-9));
    if (W < 0) throw DomainError("budget must be >= 0");
    if (W + 1 > 1000000) throw CapacityError("cost grid exceeds 1e6 cells");
    if (n * static_cast<std::size_t>(W + 1) > 200000000ull)
        throw CapacityError("dp table too large");

    const std::size_t cells = static_cast<std::size_t>(W + 1);
    std::vector<double> value(cells, 0.0);
    std::vector<char> take(n * cells, 0);
    for (std::size_t i = 0; i < n; ++i) {
        if (w[i] > W) continue;
        for (long long cap = W; cap >= w[i]; --cap) {
            const double cand = value[static_cast<std::size_t>(cap - w[i])] + tau_r[i];
            if (cand > value[static_cast<std::size_t>(cap)]) {
                value[static_cast<std::size_t>(cap)] = cand;
                take[i * cells + static_cast<std::size_t>(cap)] = 1;
            }
        }
    }
    OracleResult res;
    res.objective = value[cells - 1];
    res.chosen.assign(n, 0);
    long long cap = W;
    for (std::size_t i = n; i-- > 0;) {
        if (take[i * cells + static_cast<std::size_t>(cap)]) {
            res.chosen[i] = 1;
            cap -= w[i];
        }
    }
    return res;
}

OracleResult mckp_oracle(const MultiTreatmentInstance& inst, double budget, double grid) {
    const std::size_t m = inst.individuals();
    const int L = inst.levels();
    if (grid <= 0.0) {
        double combos = 1.0;
        for (std::size_t i = 0; i < m; ++i) {
            combos *= L;
            if (combos > 4e6)
                throw CapacityError("mckp enumeration too large; pass a cost grid");
        }
        OracleResult best;
        best.objective = -std::numeric_limits<double>::infinity();
        std::vector<int> cur(m, 0);
        std::function<void(std::size_t, double, double)> walk =
            [&](std::size_t i, double cost, double value) {
                if (cost > budget) return;
                if (i == m) {
                    if (value > best.objective) {
                        best.objective = value;
                        best.chosen = cur;
                    }
                    return;
                }
                for (int j = 0; j < L; ++j) {
                    cur[i] = j;
                    walk(i + 1, cost + inst.c(i, j), value + inst.r(i, j));
                }
                cur[i] = 0;
            };
        walk(0, 0.0, 0.0);
        if (best.chosen.empty()) throw InfeasibleError("no feasible assignment");
        return best;
    }

    // Grid DP over exact-cost cells.
    std::vector<long long> w(m * static_cast<std::size_t>(L));
    for (std::size_t i = 0; i < m; ++i)
        for (int j = 0; j < L; ++j) {
            const double q = inst.c(i, j) / grid;
            const long long v = std::llround(q);
            if (std::abs(q - static_cast<double>(v)) > 1e-9)
                throw CapacityError("cost not on the given grid");
            w[i * static_cast<std::size_t>(L) + static_cast<std::size_t>(j)] = v;
        }
    const long long W = static_cast<long long>(std::floor(budget / grid + 1e-9));
    if (W < 0) throw DomainError("budget must be >= 0");
    if (W + 1 > 1000000) throw CapacityError("cost grid exceeds 1e6 cells");
    const std::size_t cells = static_cast<std::size_t>(W + 1);
    if (m * cells > 400000000ull) throw CapacityError("dp table too large");

    const double ninf = -std::numeric_limits<double>::infinity();
    std::vector<double> prev(cells, 0.0), cur(cells, ninf);
    std::vector<signed char> choice(m * cells, -1);
    for (std::size_t i = 0; i < m; ++i) {
        std::fill(cur.begin(), cur.end(), ninf);
        for (long long cap = 0; cap <= W; ++cap) {
            for (int j = 0; j < L; ++j) {
                const long long wij =
                    w[i * static_cast<std::size_t>(L) + static_cast<std::size_t>(j)];
                if (wij > cap) continue;
                const double base = prev[static_cast<std::size_t>(cap - wij)];
                if (base == ninf) continue;
                const double cand = base + inst.r(i, j);
                if (cand > cur[static_cast<std::size_t>(cap)]) {
                    cur[static_cast<std::size_t>(cap)] = cand;
                    choice[i * cells + static_cast<std::size_t>(cap)] =
                        static_cast<signed char>(j);
                }
            }
        }
        std::swap(prev, cur);
    }
    // Best value over all caps <= W sits at W because value never decreases
    // with capacity only when every row has a zero-cost level; scan to be safe.
    long long best_cap = -1;
    double best_val = ninf;
    for (long long cap = 0; cap <= W; ++cap)
        if (prev[static_cast<std::size_t>(cap)] > best_val) {
            best_val = prev[static_cast<std::size_t>(cap)];
            best_cap = cap;
        }
    if (best_cap < 0) throw InfeasibleError("no feasible assignment");
    OracleResult res;
    res.objective = best_val;
    res.chosen.assign(m, 0);
    long long cap = best_cap;
    for (std::size_t i = m; i-- > 0;) {
        const signed char j = choice[i * cells + static_cast<std::size_t>(cap)];
        res.chosen[i] = j;
        cap -= w[i * static_cast<std::size_t>(L) + static_cast<std::size_t>(j)];
    }
    return res;
}

std::vector<int> dual_decision_argmax(const std::vector<double>& r,
                                      const std::vector<double>& c,
                                      std::size_t individuals, int levels, double alpha) {
    std::vector<int> z(individuals, 0);
    par::parallel_for(individuals, [&](std::size_t i) {
        const std::size_t base = i * static_cast<std::size_t>(levels);
        int best = 0;
        double best_v = r[base] - alpha * c[base];
        for (int j = 1; j < levels; ++j) {
            const double v = r[base + static_cast<std::size_t>(j)] -
                             alpha * c[base + static_cast<std::size_t>(j)];
            if (v > best_v) {  // strict: ties keep the smallest level
                best_v = v;
                best = j;
            }
        }
        z[i] = best;
    });
    return z;
}

std::vector<int> dual_decision_marginal(const MarginalTable& table, double alpha) {
    const int heads = table.levels - 1;
    std::vector<int> z(table.individuals, 0);
    par::parallel_for(table.individuals, [&](std::size_t i) {
        // Rows are non-increasing, so the chosen level is the count of steps
        // whose utility still exceeds alpha.
        int j = 0;
        while (j < heads && table.at(i, j) > alpha) ++j;
        z[i] = j;
    });
    return z;
}

DualSearchResult lagrangian_mtbap(const MultiTreatmentInstance& inst, double budget,
                                  double epsilon) {
    if (!(epsilon > 0.0)) throw DomainError("epsilon must be > 0");
    double base_cost = 0.0;
    for (std::size_t i = 0; i < inst.individuals(); ++i) base_cost += inst.c(i, 0);
    if (budget < base_cost)
        throw InfeasibleError("budget below the all-level-0 cost");
    const MarginalTable table = compute_marginals(inst);
    const double alpha_hi = table.max_ell();
    return dual_search(
        [&](double alpha) {
            return dual_decision_argmax(inst.rewards(), inst.costs(), inst.individuals(),
                                        inst.levels(), alpha);
        },
        inst.costs(), &inst.rewards(), inst.levels(), budget, epsilon, alpha_hi);
}

DualSearchResult threshold_mtbap(const MarginalTable& table,
                                  const std::vector<double>& costs, double budget,
                                  double epsilon, const std::vector<double>* rewards) {
    if (!(epsilon > 0.0)) throw DomainError("epsilon must be > 0");
    if (costs.size() != table.individuals * static_cast<std::size_t>(table.levels))
        throw DomainError("cost matrix has wrong shape");
    for (std::size_t i = 0; i < table.individuals; ++i)
        if (!table.monotone_ok[i])
            throw DomainError("non-monotone utility row " + std::to_string(i) +
                              "; repair it before the comparison solver");
    double base_cost = 0.0;
    for (std::size_t i = 0; i < table.individuals; ++i)
        base_cost += costs[i * static_cast<std::size_t>(table.levels)];
    if (budget < base_cost)
        throw InfeasibleError("budget below the all-level-0 cost");
    return dual_search(
        [&](double alpha) { return dual_decision_marginal(table, alpha); }, costs,
        rewards, table.levels, budget, epsilon, table.max_ell());
}

DualSearchResult lagrangian_allocate(const std::vector<double>& r,
                                     const std::vector<double>& c,
                                     std::size_t individuals, int levels, double budget,
                                     double epsilon,
                                     const std::vector<double>* accounting,
                                     const std::vector<double>* accounting_rewards) {
    if (!(epsilon > 0.0)) throw DomainError("epsilon must be > 0");
    const std::vector<double>& acct = accounting ? *accounting : c;
    const std::vector<double>& acct_r = accounting_rewards ? *accounting_rewards : r;

    auto decide = [&](double alpha) {
        return dual_decision_argmax(r, c, individuals, levels, alpha);
    };
    double alpha_hi = 1.0;
    bool bracketed = false;
    for (int tries = 0; tries < 60; ++tries) {
        const std::vector<int> z = decide(alpha_hi);
        if (consumed_cost(acct, levels, z) <= budget) {
            bracketed = true;
            break;
        }
        alpha_hi *= 2.0;
    }
    if (!bracketed)
        throw InfeasibleError("budget below what the ranked assignment can reach");
    return dual_search(decide, acct, &acct_r, levels, budget, epsilon, alpha_hi);
}

double dual_objective(const MultiTreatmentInstance& inst, double budget, double alpha) {
    const double inner = par::block_sum(inst.individuals(), [&](std::size_t i) {
        double best = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < inst.levels(); ++j)
            best = std::max(best, inst.r(i, j) - alpha * inst.c(i, j));
        return best;
    });
    return alpha * budget + inner;
}

}  // namespace uplift
