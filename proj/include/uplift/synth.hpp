#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "uplift/types.hpp"

namespace uplift {

// How treatment levels are assigned to generated samples.
//  random     - i.i.d. categorical draw from `propensity`, independent of x.
//  stratified - vocabulary mode only: every (key, level) cell receives exactly
//               the same count. Convergence checks against the closed-form
//               stationary points need this exact balance.
enum class Assignment { random, stratified };

struct SynthConfig {
    std::size_t n = 0;
    int d = 4;
    int L = 2;
    double noise_scale = 0.0;
    std::vector<double> propensity;  // length L, positive, sums to 1; empty = uniform
    std::uint64_t seed = 0;
    int vocab_size = 0;              // 0 = continuous features; K > 0 = K distinct vectors
    Assignment assignment = Assignment::random;
    // Range the per-step marginal utilities (and the binary ROI) are drawn in.
    double ell_lo = 0.05;
    double ell_hi = 0.95;
};

// Per-individual truth recorded before noise. response_* are n x L and give
// the full potential-outcome surface; marginal is n x (L-1).
struct GroundTruth {
    int L = 2;
    std::size_t n = 0;
    std::vector<double> cate_r, cate_c;          // filled when L == 2
    std::vector<double> response_r, response_c;  // n x L row-major
    std::vector<double> marginal;                // n x (L-1) row-major
    std::vector<int> key;                        // vocabulary mode: key per sample

    double response_r_at(std::size_t i, int j) const {
        return response_r[i * static_cast<std::size_t>(L) + static_cast<std::size_t>(j)];
    }
    double response_c_at(std::size_t i, int j) const {
        return response_c[i * static_cast<std::size_t>(L) + static_cast<std::size_t>(j)];
    }
    double marginal_at(std::size_t i, int h) const {
        return marginal[i * static_cast<std::size_t>(L - 1) + static_cast<std::size_t>(h)];
    }
};

// Binary trial with positive effect functions of x. Continuous mode uses
// softplus of seeded random linear projections for base and effect surfaces;
// vocabulary mode draws one (base, tau) row per key with the ROI spread over
// [ell_lo, ell_hi]. Observed outcomes are response-at-level plus clipped
// Gaussian noise.
std::pair<RctDataset, GroundTruth> gen_btap_dataset(const SynthConfig& cfg);

// Multi-level trial built so diminishing marginal utility holds strictly by
// construction: per-step cost increments are positive and the per-step
// utilities are strictly decreasing in the level, drawn in [ell_lo, ell_hi].
std::pair<RctDataset, GroundTruth> gen_mtbap_dataset(const SynthConfig& cfg);

// Sibling file for a dataset CSV. Binary truth emits cate_r,cate_c; multi
// truth emits r_0..r_{L-1},c_0..c_{L-1},l_0..l_{L-2}.
void write_ground_truth_csv(const GroundTruth& gt, const std::string& path);

}  // namespace uplift
