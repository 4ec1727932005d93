#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "uplift/errors.hpp"
#include "uplift/metrics.hpp"
#include "uplift/rng.hpp"
#include "uplift/solve.hpp"
#include "uplift/stats.hpp"
#include "uplift/synth.hpp"

using namespace uplift;

namespace {

RctDataset binary_fixture() {
    // 6 samples, 3 treated / 3 control
    std::vector<double> feats{1, 2, 3, 4, 5, 6};
    std::vector<int> t{1, 0, 1, 0, 1, 0};
    std::vector<double> yr{3.0, 1.0, 2.5, 0.5, 2.0, 1.5};
    std::vector<double> yc{1.0, 0.2, 0.8, 0.1, 0.9, 0.4};
    return RctDataset(feats, 1, t, yr, yc, 2);
}

}  // namespace

TEST_CASE("quintuples: binary reduction puts controls on the treatment side") {
    SynthConfig cfg;
    cfg.n = 40;
    cfg.d = 2;
    cfg.L = 2;
    cfg.seed = 1;
    const auto [ds, gt] = gen_btap_dataset(cfg);
    const std::vector<double> scores(ds.total(), 0.5);
    const auto qs = build_quintuples(ds, scores);
    CHECK(qs.size() == ds.total());
    for (const Quintuple& q : qs) {
        if (q.treat_side) CHECK(q.treatment == 0);  // t < L-1
        if (!q.treat_side) CHECK(q.treatment == 1);  // t > 0
    }
}

TEST_CASE("quintuples: middle levels join both sides with the right heads") {
    std::vector<double> feats{1, 2, 3};
    std::vector<int> t{0, 1, 2};
    std::vector<double> yr{1, 1, 1}, yc{1, 1, 1};
    const RctDataset ds(feats, 1, t, yr, yc, 3);
    // scores: head 0 column then head 1 column per row
    const std::vector<double> scores{10, 11, 20, 21, 30, 31};
    const auto qs = build_quintuples(ds, scores);
    REQUIRE(qs.size() == 4);
    // sample 1 (t=1) shows up on the treatment side with head 1 and on the
    // control side with head 0
    int seen_treat = 0, seen_ctl = 0;
    for (const Quintuple& q : qs) {
        if (q.index == 1 && q.treat_side) {
            CHECK(q.score == 21.0);
            ++seen_treat;
        }
        if (q.index == 1 && !q.treat_side) {
            CHECK(q.score == 20.0);
            ++seen_ctl;
        }
    }
    CHECK(seen_treat == 1);
    CHECK(seen_ctl == 1);
    // balanced levels: every weight is N / N_t = 3
    for (const Quintuple& q : qs) CHECK(q.wreward == doctest::Approx(3.0 * 1.0));
}

TEST_CASE("quintuples: empty level is a metric-domain error") {
    std::vector<double> feats{1, 2};
    std::vector<int> t{0, 2};
    std::vector<double> yr{1, 1}, yc{1, 1};
    const RctDataset ds(feats, 1, t, yr, yc, 3);
    const std::vector<double> scores(4, 0.0);
    CHECK_THROWS_AS(build_quintuples(ds, scores), MetricError);
}

TEST_CASE("cost curve: equal scores collapse to the chord exactly") {
    const RctDataset ds = binary_fixture();
    const std::vector<double> scores(ds.total(), 0.123);
    const CostCurve curve = cost_curve(binary_quintuples(ds, scores));
    REQUIRE(curve.points.size() == 1);
    CHECK(curve.points[0].x == 1.0);
    CHECK(curve.points[0].y == 1.0);
    CHECK(curve.area_model == curve.area_random);
    CHECK(mt_aucc(curve) == 0.5);
}

TEST_CASE("cost curve: endpoint equals the full-sample weighted group-mean difference") {
    const RctDataset ds = binary_fixture();
    const std::vector<double> scores{6, 5, 4, 3, 2, 1};
    const CostCurve curve = cost_curve(binary_quintuples(ds, scores));
    // raw endpoint: mean weighted treated minus mean weighted control
    const double wt = 6.0 / 3.0;  // N / N_1
    double tr = 0, cr = 0, tc = 0, cc = 0;
    for (std::size_t i = 0; i < ds.total(); ++i) {
        if (ds.treatment(i) == 1) {
            tr += wt * ds.reward(i);
            tc += wt * ds.cost(i);
        } else {
            cr += wt * ds.reward(i);
            cc += wt * ds.cost(i);
        }
    }
    const double end_r = (tr / 3.0 - cr / 3.0);
    const double end_c = (tc / 3.0 - cc / 3.0);
    CHECK(curve.end_reward == doctest::Approx(end_r));
    CHECK(curve.end_cost == doctest::Approx(end_c));
    CHECK(curve.points.back().x == 1.0);
    CHECK(curve.points.back().y == 1.0);
}

TEST_CASE("mt-aucc: oracle beats random scoring on synthetic data") {
    SynthConfig cfg;
    cfg.n = 20000;
    cfg.d = 3;
    cfg.L = 3;
    cfg.noise_scale = 0.1;
    cfg.seed = 21;
    const auto [ds, gt] = gen_mtbap_dataset(cfg);
    const CostCurve oracle = mt_cost_curve(build_quintuples(ds, gt.marginal));
    Rng rng(5);
    std::vector<double> random_scores(gt.marginal.size());
    for (double& v : random_scores) v = rng.uniform();
    const CostCurve random_curve = mt_cost_curve(build_quintuples(ds, random_scores));
    CHECK(mt_aucc(oracle) > mt_aucc(random_curve));
    CHECK(mt_aucc(oracle) > 0.55);
    CHECK(mt_aucc(random_curve) == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("mt-aucc: random scores average one half") {
    SynthConfig cfg;
    cfg.n = 4000;
    cfg.d = 2;
    cfg.L = 3;
    cfg.noise_scale = 0.1;
    cfg.seed = 22;
    const auto [ds, gt] = gen_mtbap_dataset(cfg);
    Rng rng(23);
    std::vector<double> vals;
    std::vector<double> scores(gt.marginal.size());
    for (int rep = 0; rep < 60; ++rep) {
        for (double& v : scores) v = rng.uniform();
        vals.push_back(mt_aucc(mt_cost_curve(build_quintuples(ds, scores))));
    }
    CHECK(stats::mean(vals) == doctest::Approx(0.5).epsilon(0.04));
}

TEST_CASE("curve metrics are exactly invariant under increasing transforms") {
    SynthConfig cfg;
    cfg.n = 3000;
    cfg.d = 2;
    cfg.L = 4;
    cfg.noise_scale = 0.2;
    cfg.seed = 24;
    const auto [ds, gt] = gen_mtbap_dataset(cfg);
    Rng rng(25);
    std::vector<double> scores(gt.marginal.size());
    for (double& v : scores) v = rng.normal();
    std::vector<double> warped(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i)
        warped[i] = 3.0 * std::tanh(scores[i]) + 11.0;
    CHECK(mt_aucc(mt_cost_curve(build_quintuples(ds, scores))) ==
          mt_aucc(mt_cost_curve(build_quintuples(ds, warped))));

    // binary metrics, same invariance
    SynthConfig b;
    b.n = 2000;
    b.d = 2;
    b.L = 2;
    b.noise_scale = 0.2;
    b.seed = 26;
    const auto [bds, bgt] = gen_btap_dataset(b);
    std::vector<double> s2(bds.total());
    for (double& v : s2) v = rng.normal();
    std::vector<double> w2(s2.size());
    for (std::size_t i = 0; i < s2.size(); ++i) w2[i] = std::exp(0.5 * s2[i]) + 3.0;
    CHECK(aucc(bds, s2) == aucc(bds, w2));
    CHECK(auuc(bds, s2) == auuc(bds, w2));
}

TEST_CASE("aucc agrees with mt_aucc on two-level inputs") {
    SynthConfig cfg;
    cfg.n = 5000;
    cfg.d = 3;
    cfg.L = 2;
    cfg.noise_scale = 0.15;
    cfg.seed = 27;
    const auto [ds, gt] = gen_btap_dataset(cfg);
    Rng rng(28);
    std::vector<double> scores(ds.total());
    for (double& v : scores) v = rng.normal();
    const double via_binary = aucc(ds, scores);
    const double via_mt = mt_aucc(mt_cost_curve(build_quintuples(ds, scores)));
    CHECK(std::abs(via_binary - via_mt) <= 1e-12);
}

TEST_CASE("auuc: oracle ranks best, anti-ranking scores below one half") {
    SynthConfig cfg;
    cfg.n = 20000;
    cfg.d = 3;
    cfg.L = 2;
    cfg.noise_scale = 0.1;
    cfg.seed = 29;
    const auto [ds, gt] = gen_btap_dataset(cfg);
    const double oracle = auuc(ds, gt.cate_r);
    std::vector<double> reversed(ds.total());
    for (std::size_t i = 0; i < ds.total(); ++i) reversed[i] = -gt.cate_r[i];
    const double anti = auuc(ds, reversed);
    Rng rng(30);
    std::vector<double> random_scores(ds.total());
    for (double& v : random_scores) v = rng.uniform();
    const double rnd = auuc(ds, random_scores);
    CHECK(oracle > rnd);
    CHECK(anti < 0.5);
    CHECK(rnd == doctest::Approx(0.5).epsilon(0.1));
    const std::vector<double> flat(ds.total(), 1.0);
    CHECK(auuc(ds, flat) == 0.5);
}

TEST_CASE("eom: hand-checked inverse propensity arithmetic") {
    std::vector<double> feats{1, 2};
    std::vector<int> t{1, 0};
    std::vector<double> yr{2.0, 1.0}, yc{0.5, 0.0};
    const RctDataset ds(feats, 1, t, yr, yc, 2);
    // policy matches both samples: reward (1/2)(2/1*2 + 2/1*1) = 3
    const auto [r, c] = eom(ds, PolicyTable{{1, 0}});
    CHECK(r == doctest::Approx(3.0));
    CHECK(c == doctest::Approx(0.5));
    // policy matching nothing
    const auto [r0, c0] = eom(ds, PolicyTable{{0, 1}});
    CHECK(r0 == 0.0);
    CHECK(c0 == 0.0);
}

TEST_CASE("eom: unbiased for a fixed policy over seeds") {
    const int seeds = 30;
    std::vector<double> gaps;
    for (int s = 0; s < seeds; ++s) {
        SynthConfig cfg;
        cfg.n = 3000;
        cfg.d = 2;
        cfg.L = 3;
        cfg.vocab_size = 6;
        cfg.seed = 900 + static_cast<std::uint64_t>(s);
        const auto [ds, gt] = gen_mtbap_dataset(cfg);
        // fixed rule: key parity picks level 2 or 1
        PolicyTable pol;
        pol.level.resize(ds.total());
        double truth = 0.0;
        for (std::size_t i = 0; i < ds.total(); ++i) {
            pol.level[i] = gt.key[i] % 2 == 0 ? 2 : 1;
            truth += gt.response_r_at(i, pol.level[i]);
        }
        truth /= static_cast<double>(ds.total());
        const auto [est, est_cost] = eom(ds, pol);
        gaps.push_back(est - truth);
    }
    const double m = stats::mean(gaps);
    const double se = std::sqrt(stats::sample_variance(gaps) / gaps.size());
    CHECK(std::abs(m) < 3.0 * se + 1e-12);
}

TEST_CASE("budget sweep: endpoints and monotone consumption") {
    SynthConfig cfg;
    cfg.n = 600;
    cfg.d = 2;
    cfg.L = 3;
    cfg.vocab_size = 6;
    cfg.seed = 31;
    const auto [ds, gt] = gen_mtbap_dataset(cfg);
    const MultiTreatmentInstance inst(gt.response_r, gt.response_c, gt.n, gt.L);
    const MarginalTable table = compute_marginals(inst);
    double top = 0.0;
    for (std::size_t i = 0; i < gt.n; ++i) top += gt.response_c_at(i, gt.L - 1);
    const std::vector<double> budgets{0.0, 0.25 * top, 0.5 * top, top + 1.0};
    const auto sweep = budget_sweep(
        ds,
        [&](double b) {
            return threshold_mtbap(table, inst.costs(), b, 1e-3, &inst.rewards())
                .allocation;
        },
        budgets);
    REQUIRE(sweep.size() == 4);
    // budget 0: everyone at level 0 (level-0 cost is 0), the null policy
    PolicyTable null_policy;
    null_policy.level.assign(ds.total(), 0);
    const auto [null_r, null_c] = eom(ds, null_policy);
    CHECK(sweep[0].eom_reward == doctest::Approx(null_r));
    CHECK(sweep[0].consumed == 0.0);
    // unconstrained budget: everyone at the top level
    PolicyTable top_policy;
    top_policy.level.assign(ds.total(), gt.L - 1);
    const auto [top_r, top_c] = eom(ds, top_policy);
    CHECK(sweep[3].eom_reward == doctest::Approx(top_r));
    for (std::size_t k = 0; k + 1 < sweep.size(); ++k)
        CHECK(sweep[k].consumed <= sweep[k + 1].consumed + 1e-12);
}

TEST_CASE("budget sweep: predicted utilities dominate random allocation pointwise") {
    SynthConfig cfg;
    cfg.n = 12000;
    cfg.d = 3;
    cfg.L = 3;
    cfg.vocab_size = 12;
    cfg.noise_scale = 0.2;
    cfg.seed = 33;
    const auto [ds, gt] = gen_mtbap_dataset(cfg);
    const MultiTreatmentInstance inst(gt.response_r, gt.response_c, gt.n, gt.L);
    const MarginalTable table = compute_marginals(inst);
    double top = 0.0;
    for (std::size_t i = 0; i < gt.n; ++i) top += gt.response_c_at(i, gt.L - 1);
    const std::vector<double> budgets{0.2 * top, 0.4 * top, 0.6 * top};
    const auto oracle_sweep = budget_sweep(
        ds,
        [&](double b) {
            return threshold_mtbap(table, inst.costs(), b, 1e-3, &inst.rewards())
                .allocation;
        },
        budgets);
    // random allocation: shuffle a budget-matched level assignment
    Rng rng(34);
    const auto random_sweep = budget_sweep(
        ds,
        [&](double b) {
            MarginalTable noise = table;
            for (double& v : noise.ell) v = rng.uniform();
            auto [fixed, n_fixed] = isotonic_repair(noise);
            return threshold_mtbap(fixed, inst.costs(), b, 1e-3, &inst.rewards())
                .allocation;
        },
        budgets);
    for (std::size_t k = 0; k < budgets.size(); ++k) {
        CHECK(oracle_sweep[k].feasible);
        CHECK(random_sweep[k].feasible);
        CHECK(oracle_sweep[k].eom_reward > random_sweep[k].eom_reward);
    }
}

TEST_CASE("aucc: oracle roi ranks above random scoring") {
    SynthConfig cfg;
    cfg.n = 20000;
    cfg.d = 3;
    cfg.L = 2;
    cfg.noise_scale = 0.1;
    cfg.seed = 35;
    const auto [ds, gt] = gen_btap_dataset(cfg);
    std::vector<double> roi(ds.total());
    for (std::size_t i = 0; i < ds.total(); ++i) roi[i] = gt.cate_r[i] / gt.cate_c[i];
    Rng rng(36);
    std::vector<double> random_scores(ds.total());
    for (double& v : random_scores) v = rng.uniform();
    const double oracle = aucc(ds, roi);
    const double rnd = aucc(ds, random_scores);
    CHECK(oracle > rnd);
    CHECK(rnd == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("budget sweep: infeasible budgets are flagged, not fatal") {
    // level-0 cost above zero makes a zero budget infeasible
    const MultiTreatmentInstance inst({0.0, 1.0, 0.0, 1.0}, {0.5, 1.0, 0.5, 1.0}, 2, 2);
    std::vector<double> feats{1, 2};
    const RctDataset ds(feats, 1, {0, 1}, {1.0, 2.0}, {0.5, 1.0}, 2);
    const std::vector<double> budgets{0.0, 2.0};
    const auto sweep = budget_sweep(
        ds,
        [&](double b) { return lagrangian_mtbap(inst, b, 1e-3).allocation; }, budgets);
    CHECK(!sweep[0].feasible);
    CHECK(sweep[1].feasible);
}
