#include <doctest.h>

#include <cmath>
#include <vector>

#include "uplift/errors.hpp"
#include "uplift/rng.hpp"
#include "uplift/scorer.hpp"
#include "uplift/stats.hpp"
#include "uplift/synth.hpp"
#include "uplift/train.hpp"

using namespace uplift;

namespace {

std::pair<RctDataset, GroundTruth> balanced_vocab(int L, std::uint64_t seed,
                                                  int keys = 6, int per_cell = 25) {
    SynthConfig cfg;
    cfg.vocab_size = keys;
    cfg.L = L;
    cfg.d = 3;
    cfg.n = static_cast<std::size_t>(keys * L * per_cell);
    cfg.noise_scale = 0.0;
    cfg.assignment = Assignment::stratified;
    cfg.seed = seed;
    return L == 2 ? gen_btap_dataset(cfg) : gen_mtbap_dataset(cfg);
}

}  // namespace

TEST_CASE("train: zero learning rate leaves parameters untouched") {
    const auto [ds, gt] = balanced_vocab(2, 41);
    const Scorer init = Scorer::make_tabular(ds, 1);
    TrainConfig cfg;
    cfg.learning_rate = 0.0;
    cfg.epochs = 5;
    cfg.truncate_hi = 1.0;
    const TrainResult res = train(init, ds, LossKind::dum, cfg);
    CHECK(res.scorer.params() == init.params());
    for (std::size_t e = 1; e < res.loss_trace.size(); ++e)
        CHECK(res.loss_trace[e] == res.loss_trace[0]);
}

TEST_CASE("train: fixed seed reproduces parameters bit for bit") {
    const auto [ds, gt] = balanced_vocab(3, 42);
    const Scorer init = Scorer::make_tabular(ds, 2);
    TrainConfig cfg;
    cfg.learning_rate = 2.0;
    cfg.epochs = 12;
    cfg.batch_size = 32;
    cfg.seed = 777;
    const TrainResult a = train(init, ds, LossKind::dpm, cfg);
    const TrainResult b = train(init, ds, LossKind::dpm, cfg);
    CHECK(a.scorer.params() == b.scorer.params());
    CHECK(a.loss_trace == b.loss_trace);
    CHECK(a.gamma == b.gamma);
}

TEST_CASE("train: arity rules reject mismatched loss/scorer/dataset") {
    const auto [ds2, gt2] = balanced_vocab(2, 43);
    const auto [ds3, gt3] = balanced_vocab(3, 44);
    TrainConfig cfg;
    CHECK_THROWS_AS(train(Scorer::make_tabular(ds3, 1), ds3, LossKind::dum, cfg),
                    ContractError);
    CHECK_THROWS_AS(train(Scorer::make_tabular(ds3, 1), ds3, LossKind::dpm, cfg),
                    ContractError);  // needs L-1 = 2 heads
    CHECK_THROWS_AS(train(Scorer::make_linear(7, 1), ds2, LossKind::drp, cfg),
                    ContractError);  // wrong feature dim
}

TEST_CASE("train: divergence is reported with the epoch index") {
    // large feature/reward scale makes the first oversized step overflow
    std::vector<double> feats{1e5, -9e4, 8e4, -7e4};
    const RctDataset ds(feats, 1, {1, 0, 1, 0}, {1e5, 2e5, 3e4, 1e5},
                        {0, 0, 0, 0}, 2);
    const Scorer init = Scorer::make_linear(1, 1);
    TrainConfig cfg;
    cfg.learning_rate = 1e300;
    cfg.epochs = 10;
    cfg.halve_lr_on_increase = false;
    try {
        train(init, ds, LossKind::dum, cfg);
        FAIL("expected TrainError");
    } catch (const TrainError& e) {
        CHECK(std::string(e.what()).find("epoch") != std::string::npos);
    }
}

TEST_CASE("train: drp on the convex tabular problem has a non-increasing trace") {
    const auto [ds, gt] = balanced_vocab(2, 46);
    const Scorer init = Scorer::make_tabular(ds, 1);
    TrainConfig cfg;
    cfg.learning_rate = 10.0;
    cfg.epochs = 400;
    cfg.truncate_hi = 1.0;
    const TrainResult res = train(init, ds, LossKind::drp, cfg);
    for (std::size_t e = 1; e < res.loss_trace.size(); ++e)
        CHECK(res.loss_trace[e] <= res.loss_trace[e - 1] + 1e-12);
}

TEST_CASE("train: step halving recovers from an oversized step") {
    const auto [ds, gt] = balanced_vocab(2, 47);
    const Scorer init = Scorer::make_tabular(ds, 1);
    TrainConfig cfg;
    cfg.learning_rate = 400.0;  // overshoots at first
    cfg.epochs = 200;
    cfg.truncate_hi = 1.0;
    const TrainResult res = train(init, ds, LossKind::drp, cfg);
    CHECK(!res.halvings.empty());
    CHECK(res.final_learning_rate < cfg.learning_rate);
    const int last = res.halvings.back();
    for (std::size_t e = static_cast<std::size_t>(last) + 1; e < res.loss_trace.size(); ++e)
        CHECK(res.loss_trace[e] <= res.loss_trace[e - 1] + 1e-12);
}

TEST_CASE("stationary point: converged tabular dum recovers the normalized uplift") {
    const auto [ds, gt] = balanced_vocab(2, 48);
    const Scorer init = Scorer::make_tabular(ds, 1);
    TrainConfig cfg;
    cfg.learning_rate = 5.0;
    cfg.epochs = 4000;
    cfg.truncate_hi = 1.0;
    const TrainResult res = train(init, ds, LossKind::dum, cfg);
    const DecisionTable table =
        predict_decision_factor(res.scorer, ds, LossKind::dum, res.gamma);
    double total = 0.0;
    for (const double v : gt.cate_r) total += v;
    double worst = 0.0;
    for (std::size_t i = 0; i < ds.total(); ++i)
        worst = std::max(worst, std::abs(table.value[i] - gt.cate_r[i] / total));
    CHECK(worst <= 1e-3);
    CHECK(stats::spearman(table.score, gt.cate_r) == doctest::Approx(1.0));
}

TEST_CASE("stationary point: converged tabular drp recovers roi") {
    const auto [ds, gt] = balanced_vocab(2, 49);
    const Scorer init = Scorer::make_tabular(ds, 1);
    TrainConfig cfg;
    cfg.learning_rate = 15.0;
    cfg.epochs = 3000;
    cfg.truncate_hi = 1.0;
    const TrainResult res = train(init, ds, LossKind::drp, cfg);
    const DecisionTable table =
        predict_decision_factor(res.scorer, ds, LossKind::drp, res.gamma);
    double worst = 0.0;
    for (std::size_t i = 0; i < ds.total(); ++i)
        worst = std::max(worst,
                         std::abs(table.value[i] - gt.cate_r[i] / gt.cate_c[i]));
    CHECK(worst <= 1e-3);
}

TEST_CASE("stationary point: converged tabular dpm recovers half the marginal utility") {
    const auto [ds, gt] = balanced_vocab(3, 50, 6, 20);
    const Scorer init = Scorer::make_tabular(ds, 2);
    TrainConfig cfg;
    cfg.learning_rate = 20.0;
    cfg.epochs = 4000;
    cfg.truncate_hi = 1.0;
    const TrainResult res = train(init, ds, LossKind::dpm, cfg);
    const DecisionTable table =
        predict_decision_factor(res.scorer, ds, LossKind::dpm, res.gamma);
    double worst = 0.0;
    for (std::size_t i = 0; i < ds.total(); ++i)
        for (int h = 0; h < 2; ++h)
            worst = std::max(worst, std::abs(table.value[i * 2 + static_cast<std::size_t>(h)] -
                                             gt.marginal_at(i, h)));
    CHECK(worst <= 1e-3);
}

TEST_CASE("predict: dpm estimator doubles the link output") {
    std::vector<double> feats{1.0, 1.0, 1.0};
    const RctDataset ds(feats, 1, {0, 1, 2}, {1, 1, 1}, {0, 1, 2}, 3);
    Scorer scorer = Scorer::make_tabular(ds, 2);
    const double s = std::log(0.3 / 0.7);  // sigmoid(s) = 0.3
    scorer.params() = {s, s};
    const DecisionTable table = predict_decision_factor(scorer, ds, LossKind::dpm, 1.0);
    for (const double v : table.value) CHECK(v == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("predict: dum ranking is preserved under monotone reparameterization") {
    const auto [ds, gt] = balanced_vocab(2, 51);
    Scorer scorer = Scorer::make_tabular(ds, 1);
    Rng seed_rng(99);
    for (double& p : scorer.params()) p = seed_rng.normal();
    const DecisionTable before = predict_decision_factor(scorer, ds, LossKind::dum, 1.0);
    for (double& p : scorer.params()) p = 2.0 * p + 5.0;  // strictly increasing
    const DecisionTable after = predict_decision_factor(scorer, ds, LossKind::dum, 1.0);
    for (std::size_t i = 0; i < ds.total(); ++i)
        for (std::size_t j = 0; j < ds.total(); ++j) {
            const bool lt_before = before.value[i] < before.value[j];
            const bool lt_after = after.value[i] < after.value[j];
            if (i < 40 && j < 40) CHECK(lt_before == lt_after);
        }
}

TEST_CASE("predict: kind mismatch is a contract error") {
    const auto [ds, gt] = balanced_vocab(3, 52);
    const Scorer scorer = Scorer::make_tabular(ds, 1);
    CHECK_THROWS_AS(predict_decision_factor(scorer, ds, LossKind::dpm, 1.0),
                    ContractError);
}

TEST_CASE("model json round-trips") {
    const auto [ds, gt] = balanced_vocab(3, 53);
    Scorer scorer = Scorer::make_tabular(ds, 2);
    Rng rng(1);
    for (double& p : scorer.params()) p = rng.normal();
    const std::string text = scorer.to_json(LossKind::dpm, 3, 0.75);
    const LoadedModel back = LoadedModel::from_json(text);
    CHECK(back.loss == LossKind::dpm);
    CHECK(back.n_levels == 3);
    CHECK(back.gamma == 0.75);
    CHECK(back.scorer.kind() == ScorerKind::tabular);
    CHECK(back.scorer.params() == scorer.params());
    CHECK(back.scorer.score_matrix(ds) == scorer.score_matrix(ds));

    Scorer lin = Scorer::make_linear(4, 1);
    for (double& p : lin.params()) p = rng.normal();
    const LoadedModel lin_back = LoadedModel::from_json(lin.to_json(LossKind::drp, 2, 0.5));
    CHECK(lin_back.scorer.params() == lin.params());
    CHECK(lin_back.scorer.kind() == ScorerKind::linear);
}

TEST_CASE("gamma: auto rule pins the roi target near one half") {
    const auto [ds, gt] = balanced_vocab(2, 54);
    CHECK(auto_gamma(ds, LossKind::dum) == 1.0);
    CHECK(auto_gamma(ds, LossKind::direct_rank) == 1.0);
    const double g = auto_gamma(ds, LossKind::drp);
    CHECK(g > 0.0);
    CHECK(g <= 1.0);
    // zero-noise balanced data: g = min(1, 0.5 * dc / dr) with group-mean diffs
    double dr = 0.0, dc = 0.0;
    for (std::size_t i = 0; i < ds.total(); ++i) {
        dr += gt.cate_r[i];
        dc += gt.cate_c[i];
    }
    CHECK(g == doctest::Approx(std::min(1.0, 0.5 * dc / dr)).epsilon(1e-9));
}

TEST_CASE("drp ranking tracks true roi on continuous features") {
    SynthConfig scfg;
    scfg.n = 30000;
    scfg.d = 4;
    scfg.L = 2;
    scfg.noise_scale = 0.05;
    scfg.seed = 55;
    const auto [ds, gt] = gen_btap_dataset(scfg);
    const Scorer init = Scorer::make_linear(ds.feature_dim(), 1);
    TrainConfig cfg;
    cfg.learning_rate = 0.5;
    cfg.epochs = 600;
    const TrainResult res = train(init, ds, LossKind::drp, cfg);
    const DecisionTable table =
        predict_decision_factor(res.scorer, ds, LossKind::drp, res.gamma);
    std::vector<double> roi(ds.total());
    for (std::size_t i = 0; i < ds.total(); ++i) roi[i] = gt.cate_r[i] / gt.cate_c[i];
    CHECK(stats::spearman(table.value, roi) >= 0.95);
}
