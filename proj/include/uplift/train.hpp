#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "uplift/losses.hpp"
#include "uplift/scorer.hpp"
#include "uplift/types.hpp"

namespace uplift {

struct TrainConfig {
    double learning_rate = 0.1;
    int epochs = 100;
    int batch_size = 0;  // 0 = full batch
    std::uint64_t seed = 0;
    // gamma in (0,1]; absent = group-mean rule min(1, 0.5 * dcost / dreward)
    // for the ratio losses, 1 otherwise.
    std::optional<double> scale_gamma;
    // Reward-clip quantile applied after scaling; 1 disables the clip.
    double truncate_hi = 0.999;
    bool halve_lr_on_increase = true;
};

struct TrainResult {
    Scorer scorer;
    std::vector<double> loss_trace;  // mean loss per epoch
    double gamma = 1.0;
    double final_learning_rate = 0.0;
    std::vector<int> halvings;  // epochs where the step size halved
    long long saturated = 0;
    long long skipped_batches = 0;  // mini-batches with unusable composition
};

// Seeded mini-batch SGD. Rewards are gamma-scaled and quantile-truncated once
// up front; shuffling, batching and the parameter updates are fully
// deterministic for a fixed config.
TrainResult train(const Scorer& init, const RctDataset& ds, LossKind kind,
                  const TrainConfig& cfg);

// Decision-factor estimates read off a trained scorer:
//   dum         value = softmax share q_i over the dataset (score ranks tau_r)
//   drp         value = q_i / gamma, the ROI estimate
//   dpm         value = 2 q_{ih} / gamma per head, the marginal-utility estimate
//   direct_rank value = raw score (rank only)
struct DecisionTable {
    LossKind kind = LossKind::dum;
    double gamma = 1.0;
    int heads = 1;
    std::vector<double> score;  // n x heads raw scores
    std::vector<double> value;  // n x heads estimates
};

DecisionTable predict_decision_factor(const Scorer& scorer, const RctDataset& ds,
                                      LossKind kind, double gamma);

// Scaling rule exposed for tests.
double auto_gamma(const RctDataset& ds, LossKind kind);

// Loss/scorer/dataset arity rules; throws ContractError on mismatch.
void check_compatibility(const Scorer& scorer, const RctDataset& ds, LossKind kind);

}  // namespace uplift
