#pragma once

#include <span>
#include <vector>

namespace uplift {

// Loss value plus exact gradient with respect to the scores. `saturated`
// counts samples whose score hit the +/-30 clamp applied before sigmoid
// links; the clamp protects ln(0) without disturbing ranks.
struct LossGrad {
    double loss = 0.0;
    std::vector<double> grad;
    long long saturated = 0;
};

// Binary batch view. Rewards are expected pre-scaled by gamma.
struct BinaryBatch {
    std::span<const double> yr;
    std::span<const double> yc;
    std::span<const int> t;  // 0 = control, 1 = treated
};

// Multi-level batch view; levels are dense 0..L-1.
struct MultiBatch {
    std::span<const double> yr;
    std::span<const double> yc;
    std::span<const int> t;
    int L = 2;
};

// Uplift-rank loss: batch-local softmax q over the scores,
//   L = -[(1/n1) sum_{t=1} y^r ln q - (1/n0) sum_{t=0} y^r ln q].
// Throws BatchError unless both groups are present.
LossGrad dum_loss_grad(std::span<const double> s, const BinaryBatch& b);

// ROI loss with q = sigmoid(s):
//   L = -[(1/n1) sum_{t=1} (y^r ln(q/(1-q)) + y^c ln(1-q)) - (1/n0) sum_{t=0} (...)].
LossGrad drp_loss_grad(std::span<const double> s, const BinaryBatch& b);

// Per-coordinate second derivative of the ROI loss; its Hessian is diagonal.
std::vector<double> drp_curvature(std::span<const double> s, const BinaryBatch& b);

// Marginal-utility loss over L-1 heads, q = sigmoid(s), scores n x (L-1):
// a sample at level t contributes head t-1 weighted -1/n_t (when t > 0) and
// head t weighted +1/n_t (when t < L-1), each term q y^r - q^2 y^c.
LossGrad dpm_loss_grad(std::span<const double> s, const MultiBatch& b);

// Ranking loss kept as a negative control: q = tanh(s), p = within-group
// softmax of q, L = tau_c_bar / tau_r_bar on the p-weighted group means.
// Throws DomainError when |tau_r_bar| < 1e-9 (the loss is undefined there).
LossGrad direct_rank_loss_grad(std::span<const double> s, const BinaryBatch& b);

}  // namespace uplift
