#include "uplift/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "uplift/errors.hpp"
#include "uplift/parallel.hpp"
#include "uplift/rng.hpp"

namespace uplift {

namespace {

double sigmoid(double s) {
    s = std::clamp(s, -30.0, 30.0);
    if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
    const double e = std::exp(s);
    return e / (1.0 + e);
}

// Mean reward/cost per level.
struct LevelMeans {
    std::vector<double> r, c;
};

LevelMeans level_means(const RctDataset& ds) {
    const int L = ds.n_levels();
    LevelMeans m;
    m.r.assign(static_cast<std::size_t>(L), 0.0);
    m.c.assign(static_cast<std::size_t>(L), 0.0);
    for (std::size_t i = 0; i < ds.total(); ++i) {
        m.r[static_cast<std::size_t>(ds.treatment(i))] += ds.reward(i);
        m.c[static_cast<std::size_t>(ds.treatment(i))] += ds.cost(i);
    }
    for (int j = 0; j < L; ++j) {
        const auto cnt = ds.counts()[static_cast<std::size_t>(j)];
        if (cnt > 0) {
            m.r[static_cast<std::size_t>(j)] /= static_cast<double>(cnt);
            m.c[static_cast<std::size_t>(j)] /= static_cast<double>(cnt);
        }
    }
    return m;
}

// Scatter dL/dscore into dL/dparams. Serial on purpose: the accumulation
// order is part of the determinism contract.
void accumulate_param_grad(const Scorer& scorer, const RctDataset& ds,
                           const std::vector<int>& keys,
                           std::span<const std::size_t> batch,
                           std::span<const double> dscore,
                           std::vector<double>& grad) {
    const std::size_t heads = static_cast<std::size_t>(scorer.heads());
    if (scorer.kind() == ScorerKind::tabular) {
        for (std::size_t b = 0; b < batch.size(); ++b) {
            const int key = keys[batch[b]];
            if (key < 0) continue;
            for (std::size_t h = 0; h < heads; ++h)
                grad[static_cast<std::size_t>(key) * heads + h] += dscore[b * heads + h];
        }
        return;
    }
    const std::size_t d = static_cast<std::size_t>(scorer.feature_dim());
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const auto x = ds.features_of(batch[b]);
        for (std::size_t h = 0; h < heads; ++h) {
            const double g = dscore[b * heads + h];
            if (g == 0.0) continue;
            const std::size_t base = h * (d + 1);
            for (std::size_t k = 0; k < d; ++k) grad[base + k] += g * x[k];
            grad[base + d] += g;
        }
    }
}

void score_batch(const Scorer& scorer, const RctDataset& ds, const std::vector<int>& keys,
                 std::span<const std::size_t> batch, std::vector<double>& out) {
    const std::size_t heads = static_cast<std::size_t>(scorer.heads());
    out.resize(batch.size() * heads);
    const std::vector<double>& params = scorer.params();
    if (scorer.kind() == ScorerKind::tabular) {
        par::parallel_for(batch.size(), [&](std::size_t b) {
            const int key = keys[batch[b]];
            for (std::size_t h = 0; h < heads; ++h)
                out[b * heads + h] =
                    key < 0 ? 0.0 : params[static_cast<std::size_t>(key) * heads + h];
        });
        return;
    }
    par::parallel_for(batch.size(), [&](std::size_t b) {
        const auto x = ds.features_of(batch[b]);
        const std::size_t d = x.size();
        for (std::size_t h = 0; h < heads; ++h) {
            const std::size_t base = h * (d + 1);
            double acc = params[base + d];
            for (std::size_t k = 0; k < d; ++k) acc += params[base + k] * x[k];
            out[b * heads + h] = acc;
        }
    });
}

}  // namespace

void check_compatibility(const Scorer& scorer, const RctDataset& ds, LossKind kind) {
    const int L = ds.n_levels();
    if (kind == LossKind::dpm) {
        if (scorer.heads() != L - 1)
            throw ContractError("dpm needs a per-level scorer with L-1 heads (have " +
                                std::to_string(scorer.heads()) + ", need " +
                                std::to_string(L - 1) + ")");
    } else {
        if (L != 2)
            throw ContractError(std::string(to_string(kind)) +
                                " requires a 2-level dataset, got L = " + std::to_string(L));
        if (scorer.heads() != 1)
            throw ContractError(std::string(to_string(kind)) + " requires a single-head scorer");
    }
    for (int j = 0; j < L; ++j)
        if (ds.counts()[static_cast<std::size_t>(j)] == 0)
            throw ContractError("treatment level " + std::to_string(j) +
                                " is empty; every level must be populated for training");
    if (scorer.kind() == ScorerKind::linear && scorer.feature_dim() != ds.feature_dim())
        throw ContractError("scorer feature dim does not match dataset");
}

double auto_gamma(const RctDataset& ds, LossKind kind) {
    if (kind == LossKind::dum || kind == LossKind::direct_rank) return 1.0;
    const LevelMeans m = level_means(ds);
    const int L = ds.n_levels();
    const double dr = (m.r[static_cast<std::size_t>(L - 1)] - m.r[0]) / (L - 1);
    const double dc = (m.c[static_cast<std::size_t>(L - 1)] - m.c[0]) / (L - 1);
    if (!(dr > 0.0) || !(dc > 0.0)) return 1.0;
    return std::min(1.0, 0.5 * dc / dr);
}

TrainResult train(const Scorer& init, const RctDataset& ds, LossKind kind,
                  const TrainConfig& cfg) {
    check_compatibility(init, ds, kind);
    if (!(cfg.learning_rate >= 0.0)) throw ConfigError("learning_rate must be >= 0");
    if (cfg.epochs < 0) throw ConfigError("epochs must be >= 0");
    if (!(cfg.truncate_hi > 0.0 && cfg.truncate_hi <= 1.0))
        throw ConfigError("truncate_hi must lie in (0, 1]");
    double gamma = 1.0;
    if (cfg.scale_gamma) {
        if (!(*cfg.scale_gamma > 0.0 && *cfg.scale_gamma <= 1.0))
            throw ConfigError("scale_gamma must lie in (0, 1]");
        gamma = *cfg.scale_gamma;
    } else {
        gamma = auto_gamma(ds, kind);
    }

    const std::size_t n = ds.total();
    std::vector<double> yr(n);
    for (std::size_t i = 0; i < n; ++i) yr[i] = gamma * ds.reward(i);
    if (cfg.truncate_hi < 1.0) {
        std::vector<double> sorted = yr;
        std::size_t idx = static_cast<std::size_t>(
            std::ceil(cfg.truncate_hi * static_cast<double>(n))) - 1;
        idx = std::min(idx, n - 1);
        std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(idx),
                         sorted.end());
        const double cap = sorted[idx];
        for (double& v : yr) v = std::min(v, cap);
    }

    TrainResult res;
    res.scorer = init;
    res.gamma = gamma;
    const std::vector<int> keys = res.scorer.key_indices(ds);

    const std::size_t bs = cfg.batch_size <= 0 ? n : std::min<std::size_t>(
        static_cast<std::size_t>(cfg.batch_size), n);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    const std::uint64_t shuffle_stream = derive_seed(cfg.seed, "shuffle");

    std::vector<double> batch_yr, batch_yc, scores, param_grad(res.scorer.param_count());
    std::vector<int> batch_t;
    std::vector<std::size_t> batch_idx;

    double lr = cfg.learning_rate;
    res.final_learning_rate = lr;
    double prev_epoch_loss = std::numeric_limits<double>::infinity();

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (bs < n) {
            Rng shuffle_rng(item_seed(shuffle_stream, static_cast<std::uint64_t>(epoch)));
            shuffle_rng.shuffle(order);
        }
        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < n; start += bs) {
            std::size_t stop = std::min(n, start + bs);
            if (n - stop < bs / 2) stop = n;  // fold short tails into this batch
            const std::size_t m = stop - start;
            batch_idx.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                             order.begin() + static_cast<std::ptrdiff_t>(stop));
            batch_yr.resize(m);
            batch_yc.resize(m);
            batch_t.resize(m);
            for (std::size_t b = 0; b < m; ++b) {
                batch_yr[b] = yr[batch_idx[b]];
                batch_yc[b] = ds.cost(batch_idx[b]);
                batch_t[b] = ds.treatment(batch_idx[b]);
            }
            score_batch(res.scorer, ds, keys, batch_idx, scores);

            LossGrad lg;
            try {
                switch (kind) {
                case LossKind::dum:
                    lg = dum_loss_grad(scores, {batch_yr, batch_yc, batch_t});
                    break;
                case LossKind::drp:
                    lg = drp_loss_grad(scores, {batch_yr, batch_yc, batch_t});
                    break;
                case LossKind::direct_rank:
                    lg = direct_rank_loss_grad(scores, {batch_yr, batch_yc, batch_t});
                    break;
                case LossKind::dpm:
                    lg = dpm_loss_grad(scores,
                                       {batch_yr, batch_yc, batch_t, ds.n_levels()});
                    break;
                }
            } catch (const BatchError&) {
                // a shuffled mini-batch can come up one-sided; skip it
                ++res.skipped_batches;
                if (stop == n) break;
                continue;
            }
            if (!std::isfinite(lg.loss))
                throw TrainError("training diverged at epoch " + std::to_string(epoch));
            epoch_loss += lg.loss;
            res.saturated += lg.saturated;
            ++batches;

            if (lr > 0.0) {
                std::fill(param_grad.begin(), param_grad.end(), 0.0);
                accumulate_param_grad(res.scorer, ds, keys, batch_idx, lg.grad, param_grad);
                std::vector<double>& params = res.scorer.params();
                for (std::size_t p = 0; p < params.size(); ++p) {
                    params[p] -= lr * param_grad[p];
                    if (!std::isfinite(params[p]))
                        throw TrainError("parameters diverged at epoch " +
                                         std::to_string(epoch));
                }
            }
            if (stop == n) break;
        }
        if (batches == 0)
            throw TrainError("every batch was degenerate at epoch " +
                             std::to_string(epoch));
        epoch_loss /= static_cast<double>(batches);
        if (!std::isfinite(epoch_loss))
            throw TrainError("training diverged at epoch " + std::to_string(epoch));
        res.loss_trace.push_back(epoch_loss);
        if (cfg.halve_lr_on_increase && epoch_loss > prev_epoch_loss) {
            lr *= 0.5;
            res.halvings.push_back(epoch);
        }
        prev_epoch_loss = epoch_loss;
        res.final_learning_rate = lr;
    }
    return res;
}

DecisionTable predict_decision_factor(const Scorer& scorer, const RctDataset& ds,
                                      LossKind kind, double gamma) {
    check_compatibility(scorer, ds, kind);
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ContractError("gamma must lie in (0, 1]");
    DecisionTable out;
    out.kind = kind;
    out.gamma = gamma;
    out.heads = scorer.heads();
    out.score = scorer.score_matrix(ds);
    const std::size_t total = out.score.size();
    out.value.resize(total);
    switch (kind) {
        case LossKind::dum: {
            const std::size_t n = ds.total();
            const double smax =
                par::block_max(n, [&](std::size_t i) { return out.score[i]; });
            const double z = par::block_sum(
                n, [&](std::size_t i) { return std::exp(out.score[i] - smax); });
            const double lse = smax + std::log(z);
            par::parallel_for(n, [&](std::size_t i) {
                out.value[i] = std::exp(out.score[i] - lse);
            });
            break;
        }
        case LossKind::drp:
            par::parallel_for(total, [&](std::size_t i) {
                out.value[i] = sigmoid(out.score[i]) / gamma;
            });
            break;
        case LossKind::dpm:
            par::parallel_for(total, [&](std::size_t i) {
                out.value[i] = 2.0 * sigmoid(out.score[i]) / gamma;
            });
            break;
        case LossKind::direct_rank:
            out.value = out.score;
            break;
    }
    return out;
}

}  // namespace uplift
