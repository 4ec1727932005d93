#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace uplift {

// One randomized-trial observation: feature vector, assigned treatment level,
// observed reward and cost. Levels are dense and 0-based; L-1 is the top.
struct RctSample {
    std::vector<double> features;
    int treatment = 0;
    double reward = 0.0;
    double cost = 0.0;
};

// Immutable column-oriented trial dataset. Construction validates the hard
// invariants (finite features, level range, non-negative finite outcomes)
// and populates per-level counts; empty levels are allowed here and surface
// through validate_dataset instead.
class RctDataset {
public:
    RctDataset(std::vector<double> features, int feature_dim,
               std::vector<int> treatment, std::vector<double> reward,
               std::vector<double> cost, int n_levels);

    static RctDataset from_samples(std::span<const RctSample> samples, int n_levels);

    std::size_t total() const { return n_; }
    int n_levels() const { return levels_; }
    int feature_dim() const { return dim_; }
    const std::vector<std::int64_t>& counts() const { return counts_; }

    std::span<const double> features_of(std::size_t i) const {
        return {features_.data() + i * static_cast<std::size_t>(dim_),
                static_cast<std::size_t>(dim_)};
    }
    int treatment(std::size_t i) const { return treatment_[i]; }
    double reward(std::size_t i) const { return reward_[i]; }
    double cost(std::size_t i) const { return cost_[i]; }

    const std::vector<double>& feature_data() const { return features_; }
    const std::vector<int>& treatments() const { return treatment_; }
    const std::vector<double>& rewards() const { return reward_; }
    const std::vector<double>& costs() const { return cost_; }

private:
    std::vector<double> features_;  // n x d row-major
    std::vector<int> treatment_;
    std::vector<double> reward_;
    std::vector<double> cost_;
    std::vector<std::int64_t> counts_;
    std::size_t n_ = 0;
    int dim_ = 0;
    int levels_ = 0;
};

// Chosen treatment level per individual plus the budget it consumes.
// The binary problem uses levels {0, 1}.
struct Allocation {
    std::vector<int> chosen;
    double consumed_cost = 0.0;
    double objective = 0.0;
};

// Column layout of an input CSV. An absent cost column means cost == 0.
struct SchemaConfig {
    std::vector<std::string> feature_columns;
    std::string treatment_column;
    std::string reward_column;
    std::optional<std::string> cost_column;
};

struct LevelStats {
    std::int64_t count = 0;
    double reward_mean = 0.0;
    double cost_mean = 0.0;
};

// Report-only diagnostics. A set flag marks a violated invariant.
struct DatasetReport {
    std::vector<LevelStats> levels;
    std::vector<std::pair<std::string, bool>> flags;

    bool flagged(const std::string& name) const;
    bool all_pass() const;
    std::string to_json() const;  // keys: "counts", "reward_means", "cost_means", "flags"
};

DatasetReport validate_dataset(const RctDataset& ds);

}  // namespace uplift
