#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "uplift/types.hpp"

namespace uplift {

enum class ScorerKind { linear, tabular };

// The three direct losses plus the ranking loss kept as a negative control.
enum class LossKind { dum, drp, dpm, direct_rank };

const char* to_string(LossKind k);
const char* to_string(ScorerKind k);
LossKind loss_kind_from(const std::string& name);
ScorerKind scorer_kind_from(const std::string& name);

// Heads a scorer needs for a loss on an L-level dataset: the per-level losses
// keep one head per upgrade step, the binary losses a single head.
int heads_for(LossKind kind, int n_levels);

// Parametric score model. Linear: s(x, h) = w_h . x + b_h. Tabular: one
// parameter per (feature-vector key, head); keys are frozen from the dataset
// the scorer is built on and unseen keys score 0.
class Scorer {
public:
    Scorer() = default;  // empty placeholder; build real scorers via make_*

    static Scorer make_linear(int feature_dim, int heads);
    static Scorer make_tabular(const RctDataset& vocab_source, int heads);

    ScorerKind kind() const { return kind_; }
    int heads() const { return heads_; }
    int feature_dim() const { return dim_; }
    std::size_t param_count() const { return params_.size(); }
    int key_count() const { return static_cast<int>(keys_.size()); }

    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }

    double score(std::span<const double> x, int head) const;
    int key_of(std::span<const double> x) const;  // tabular; -1 when unseen

    // n x heads score matrix, row-major.
    std::vector<double> score_matrix(const RctDataset& ds) const;
    // Tabular key per sample (-1 unseen); empty vector for linear scorers.
    std::vector<int> key_indices(const RctDataset& ds) const;

    // Model file: kind, arity, levels, feature dim, gamma, params, key map.
    std::string to_json(LossKind loss, int n_levels, double gamma) const;

private:
    friend struct LoadedModel;
    ScorerKind kind_ = ScorerKind::linear;
    int heads_ = 1;
    int dim_ = 0;
    std::vector<double> params_;
    std::map<std::vector<double>, int> keys_;  // tabular only
};

struct LoadedModel {
    Scorer scorer;
    LossKind loss = LossKind::dum;
    int n_levels = 2;
    double gamma = 1.0;

    static LoadedModel from_json(const std::string& text);
};

}  // namespace uplift
