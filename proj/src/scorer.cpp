#include "uplift/scorer.hpp"

#include <nlohmann/json.hpp>

#include "uplift/errors.hpp"
#include "uplift/parallel.hpp"

namespace uplift {

const char* to_string(LossKind k) {
    switch (k) {
        case LossKind::dum: return "dum";
        case LossKind::drp: return "drp";
        case LossKind::dpm: return "dpm";
        case LossKind::direct_rank: return "direct_rank";
    }
    return "?";
}

const char* to_string(ScorerKind k) {
    return k == ScorerKind::linear ? "linear" : "tabular";
}

LossKind loss_kind_from(const std::string& name) {
    if (name == "dum") return LossKind::dum;
    if (name == "drp") return LossKind::drp;
    if (name == "dpm") return LossKind::dpm;
    if (name == "direct_rank") return LossKind::direct_rank;
    throw ConfigError("unknown loss kind '" + name + "'");
}

ScorerKind scorer_kind_from(const std::string& name) {
    if (name == "linear") return ScorerKind::linear;
    if (name == "tabular") return ScorerKind::tabular;
    throw ConfigError("unknown scorer kind '" + name + "'");
}

int heads_for(LossKind kind, int n_levels) {
    if (kind == LossKind::dpm) return n_levels - 1;
    if (n_levels != 2)
        throw ContractError(std::string(to_string(kind)) + " requires a 2-level dataset");
    return 1;
}

Scorer Scorer::make_linear(int feature_dim, int heads) {
    if (feature_dim < 1 || heads < 1) throw ConfigError("bad scorer shape");
    Scorer s;
    s.kind_ = ScorerKind::linear;
    s.dim_ = feature_dim;
    s.heads_ = heads;
    s.params_.assign(static_cast<std::size_t>(heads) * static_cast<std::size_t>(feature_dim + 1),
                     0.0);
    return s;
}

Scorer Scorer::make_tabular(const RctDataset& vocab_source, int heads) {
    if (heads < 1) throw ConfigError("bad scorer shape");
    Scorer s;
    s.kind_ = ScorerKind::tabular;
    s.dim_ = vocab_source.feature_dim();
    s.heads_ = heads;
    int next = 0;
    for (std::size_t i = 0; i < vocab_source.total(); ++i) {
        const auto x = vocab_source.features_of(i);
        const std::vector<double> key(x.begin(), x.end());
        if (s.keys_.emplace(key, next).second) ++next;
    }
    s.params_.assign(static_cast<std::size_t>(next) * static_cast<std::size_t>(heads), 0.0);
    return s;
}

double Scorer::score(std::span<const double> x, int head) const {
    if (kind_ == ScorerKind::linear) {
        const std::size_t base =
            static_cast<std::size_t>(head) * static_cast<std::size_t>(dim_ + 1);
        double acc = params_[base + static_cast<std::size_t>(dim_)];  // bias
        for (int k = 0; k < dim_; ++k)
            acc += params_[base + static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(k)];
        return acc;
    }
    const int key = key_of(x);
    if (key < 0) return 0.0;
    return params_[static_cast<std::size_t>(key) * static_cast<std::size_t>(heads_) +
                   static_cast<std::size_t>(head)];
}

int Scorer::key_of(std::span<const double> x) const {
    const std::vector<double> key(x.begin(), x.end());
    const auto it = keys_.find(key);
    return it == keys_.end() ? -1 : it->second;
}

std::vector<double> Scorer::score_matrix(const RctDataset& ds) const {
    const std::size_t n = ds.total();
    const std::size_t h = static_cast<std::size_t>(heads_);
    std::vector<double> out(n * h);
    if (kind_ == ScorerKind::tabular) {
        const std::vector<int> keys = key_indices(ds);
        par::parallel_for(n, [&](std::size_t i) {
            for (std::size_t j = 0; j < h; ++j)
                out[i * h + j] = keys[i] < 0
                                     ? 0.0
                                     : params_[static_cast<std::size_t>(keys[i]) * h + j];
        });
        return out;
    }
    par::parallel_for(n, [&](std::size_t i) {
        const auto x = ds.features_of(i);
        for (std::size_t j = 0; j < h; ++j) out[i * h + j] = score(x, static_cast<int>(j));
    });
    return out;
}

std::vector<int> Scorer::key_indices(const RctDataset& ds) const {
    if (kind_ != ScorerKind::tabular) return {};
    const std::size_t n = ds.total();
    std::vector<int> keys(n);
    par::parallel_for(n, [&](std::size_t i) { keys[i] = key_of(ds.features_of(i)); });
    return keys;
}

std::string Scorer::to_json(LossKind loss, int n_levels, double gamma) const {
    nlohmann::json j;
    j["kind"] = to_string(kind_);
    j["arity"] = heads_ == 1 ? "single" : "per-level";
    j["heads"] = heads_;
    j["loss"] = to_string(loss);
    j["L"] = n_levels;
    j["d"] = dim_;
    j["gamma"] = gamma;
    j["params"] = params_;
    if (kind_ == ScorerKind::tabular) {
        // Keys serialized in id order so params line up on reload.
        std::vector<const std::vector<double>*> ordered(keys_.size());
        for (const auto& [vec, id] : keys_) ordered[static_cast<std::size_t>(id)] = &vec;
        nlohmann::json karr = nlohmann::json::array();
        for (const auto* v : ordered) karr.push_back(*v);
        j["keys"] = std::move(karr);
    }
    return j.dump(2);
}

LoadedModel LoadedModel::from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    Scorer s;
    s.kind_ = scorer_kind_from(j.at("kind").get<std::string>());
    s.heads_ = j.at("heads").get<int>();
    s.dim_ = j.at("d").get<int>();
    s.params_ = j.at("params").get<std::vector<double>>();
    if (s.kind_ == ScorerKind::tabular) {
        const auto karr = j.at("keys");
        int id = 0;
        for (const auto& k : karr) s.keys_.emplace(k.get<std::vector<double>>(), id++);
    }
    LoadedModel out;
    out.scorer = std::move(s);
    out.loss = loss_kind_from(j.at("loss").get<std::string>());
    out.n_levels = j.at("L").get<int>();
    out.gamma = j.at("gamma").get<double>();
    return out;
}

}  // namespace uplift
