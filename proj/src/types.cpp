#include "uplift/types.hpp"

#include <cmath>
#include <nlohmann/json.hpp>

#include "uplift/errors.hpp"

namespace uplift {

RctDataset::RctDataset(std::vector<double> features, int feature_dim,
                       std::vector<int> treatment, std::vector<double> reward,
                       std::vector<double> cost, int n_levels)
    : features_(std::move(features)),
      treatment_(std::move(treatment)),
      reward_(std::move(reward)),
      cost_(std::move(cost)),
      n_(treatment_.size()),
      dim_(feature_dim),
      levels_(n_levels) {
    if (dim_ < 1) throw DataError("feature_dim must be >= 1");
    if (levels_ < 2) throw DataError("n_levels must be >= 2");
    if (features_.size() != n_ * static_cast<std::size_t>(dim_))
        throw DataError("feature buffer size does not match n * feature_dim");
    if (reward_.size() != n_ || cost_.size() != n_)
        throw DataError("column lengths differ");
    for (const double f : features_)
        if (!std::isfinite(f)) throw DataError("non-finite feature value");
    counts_.assign(static_cast<std::size_t>(levels_), 0);
    for (std::size_t i = 0; i < n_; ++i) {
        const int t = treatment_[i];
        if (t < 0 || t >= levels_)
            throw DataError("treatment level out of range at row " + std::to_string(i));
        if (!std::isfinite(reward_[i]) || reward_[i] < 0.0)
            throw DataError("reward must be finite and non-negative at row " +
                            std::to_string(i));
        if (!std::isfinite(cost_[i]) || cost_[i] < 0.0)
            throw DataError("cost must be finite and non-negative at row " +
                            std::to_string(i));
        ++counts_[static_cast<std::size_t>(t)];
    }
}

RctDataset RctDataset::from_samples(std::span<const RctSample> samples, int n_levels) {
    if (samples.empty()) throw DataError("empty sample list");
    const int d = static_cast<int>(samples.front().features.size());
    std::vector<double> features;
    features.reserve(samples.size() * static_cast<std::size_t>(d));
    std::vector<int> treatment;
    std::vector<double> reward, cost;
    treatment.reserve(samples.size());
    reward.reserve(samples.size());
    cost.reserve(samples.size());
    for (const RctSample& s : samples) {
        if (static_cast<int>(s.features.size()) != d)
            throw DataError("inconsistent feature dimension across samples");
        features.insert(features.end(), s.features.begin(), s.features.end());
        treatment.push_back(s.treatment);
        reward.push_back(s.reward);
        cost.push_back(s.cost);
    }
    return RctDataset(std::move(features), d, std::move(treatment),
                      std::move(reward), std::move(cost), n_levels);
}

bool DatasetReport::flagged(const std::string& name) const {
    for (const auto& [k, v] : flags)
        if (k == name) return v;
    return false;
}

bool DatasetReport::all_pass() const {
    for (const auto& [k, v] : flags)
        if (v) return false;
    return true;
}

std::string DatasetReport::to_json() const {
    nlohmann::json j;
    j["counts"] = nlohmann::json::array();
    j["reward_means"] = nlohmann::json::array();
    j["cost_means"] = nlohmann::json::array();
    for (const LevelStats& s : levels) {
        j["counts"].push_back(s.count);
        j["reward_means"].push_back(s.reward_mean);
        j["cost_means"].push_back(s.cost_mean);
    }
    j["flags"] = nlohmann::json::object();
    for (const auto& [k, v] : flags) j["flags"][k] = v;
    return j.dump(2);
}

DatasetReport validate_dataset(const RctDataset& ds) {
    DatasetReport rep;
    const int L = ds.n_levels();
    rep.levels.assign(static_cast<std::size_t>(L), {});
    std::int64_t total = 0;
    for (int j = 0; j < L; ++j) {
        rep.levels[static_cast<std::size_t>(j)].count = ds.counts()[static_cast<std::size_t>(j)];
        total += ds.counts()[static_cast<std::size_t>(j)];
    }
    bool negative_reward = false, negative_cost = false, nonfinite = false,
         out_of_range = false;
    for (std::size_t i = 0; i < ds.total(); ++i) {
        const int t = ds.treatment(i);
        if (t < 0 || t >= L) {
            out_of_range = true;
            continue;
        }
        LevelStats& s = rep.levels[static_cast<std::size_t>(t)];
        s.reward_mean += ds.reward(i);
        s.cost_mean += ds.cost(i);
        if (ds.reward(i) < 0.0) negative_reward = true;
        if (ds.cost(i) < 0.0) negative_cost = true;
        if (!std::isfinite(ds.reward(i)) || !std::isfinite(ds.cost(i))) nonfinite = true;
    }
    bool empty_level = false;
    for (LevelStats& s : rep.levels) {
        if (s.count == 0) {
            empty_level = true;
        } else {
            s.reward_mean /= static_cast<double>(s.count);
            s.cost_mean /= static_cast<double>(s.count);
        }
    }
    rep.flags.emplace_back("empty treatment group", empty_level);
    rep.flags.emplace_back("count mismatch", total != static_cast<std::int64_t>(ds.total()));
    rep.flags.emplace_back("treatment out of range", out_of_range);
    rep.flags.emplace_back("negative reward", negative_reward);
    rep.flags.emplace_back("negative cost", negative_cost);
    rep.flags.emplace_back("non-finite outcome", nonfinite);
    return rep;
}

}  // namespace uplift
