#pragma once

#include <vector>

#include "uplift/types.hpp"

namespace uplift {

// Two-phase reference pipeline, stage one: a single response model with the
// treatment level as an input (an S-learner). Stage two feeds its predicted
// response matrices to the dual-search allocator.
enum class BaselineKind { slearner_linear, slearner_tabular };

BaselineKind baseline_kind_from(const std::string& name);
const char* to_string(BaselineKind k);

struct ResponseModel {
    std::vector<double> r;  // n x L predicted rewards
    std::vector<double> c;  // n x L predicted costs
    std::size_t rows = 0;
    int levels = 0;
};

// Fits reward and cost responses on the trial data and predicts the full
// response matrix for every individual in it.
//   linear  - least squares on [x, j] with the level as a numeric feature
//   tabular - per (feature-key, level) cell means, level means as fallback
ResponseModel fit_slearner(const RctDataset& ds, BaselineKind kind);

}  // namespace uplift
