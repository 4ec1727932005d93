#include <doctest.h>

#include <vector>

#include "uplift/losses.hpp"
#include "uplift/metrics.hpp"
#include "uplift/parallel.hpp"
#include "uplift/rng.hpp"
#include "uplift/solve.hpp"
#include "uplift/synth.hpp"
#include "uplift/train.hpp"

using namespace uplift;

namespace {

// Runs f in both execution modes and hands both results to check.
template <typename F, typename C>
void both_modes(F&& f, C&& check) {
    const par::Mode saved = par::mode();
    par::set_mode(par::Mode::serial);
    const auto serial = f();
    par::set_mode(par::Mode::openmp);
    const auto openmp = f();
    par::set_mode(saved);
    check(serial, openmp);
}

}  // namespace

TEST_CASE("block reductions are bitwise identical across modes") {
    Rng rng(61);
    const std::size_t n = 50011;  // odd size spanning many blocks
    std::vector<double> v(n);
    for (double& x : v) x = rng.normal() * rng.uniform(0.0, 100.0);
    both_modes([&] { return par::block_sum(n, [&](std::size_t i) { return v[i]; }); },
               [](double a, double b) { CHECK(a == b); });
    both_modes(
        [&] {
            return par::block_sum_arr<3>(n, [&](std::size_t i) {
                return std::array<double, 3>{v[i], v[i] * v[i], 1.0 / (1.0 + v[i] * v[i])};
            });
        },
        [](const auto& a, const auto& b) {
            CHECK(a[0] == b[0]);
            CHECK(a[1] == b[1]);
            CHECK(a[2] == b[2]);
        });
    both_modes([&] { return par::block_max(n, [&](std::size_t i) { return v[i]; }); },
               [](double a, double b) { CHECK(a == b); });
}

TEST_CASE("losses produce identical values and gradients in both modes") {
    Rng rng(62);
    const std::size_t n = 30000;
    std::vector<double> yr(n), yc(n), s(n);
    std::vector<int> t(n);
    for (std::size_t i = 0; i < n; ++i) {
        yr[i] = rng.uniform(0.0, 2.0);
        yc[i] = rng.uniform(0.0, 2.0);
        t[i] = static_cast<int>(rng.below(2));
        s[i] = rng.normal();
    }
    const BinaryBatch batch{yr, yc, t};
    for (auto* fn : {&dum_loss_grad, &drp_loss_grad, &direct_rank_loss_grad}) {
        both_modes([&] { return fn(s, batch); },
                   [](const LossGrad& a, const LossGrad& b) {
                       CHECK(a.loss == b.loss);
                       CHECK(a.grad == b.grad);
                   });
    }

    const int L = 4;
    std::vector<int> tm(n);
    std::vector<double> sm(n * 3);
    for (std::size_t i = 0; i < n; ++i) tm[i] = static_cast<int>(rng.below(L));
    for (double& x : sm) x = rng.normal();
    both_modes([&] { return dpm_loss_grad(sm, {yr, yc, tm, L}); },
               [](const LossGrad& a, const LossGrad& b) {
                   CHECK(a.loss == b.loss);
                   CHECK(a.grad == b.grad);
               });
}

TEST_CASE("generation, training and metrics are mode-independent") {
    SynthConfig cfg;
    cfg.n = 24000;
    cfg.d = 3;
    cfg.L = 3;
    cfg.noise_scale = 0.2;
    cfg.vocab_size = 8;
    cfg.seed = 63;
    both_modes([&] { return gen_mtbap_dataset(cfg); },
               [](const auto& a, const auto& b) {
                   CHECK(a.first.rewards() == b.first.rewards());
                   CHECK(a.first.costs() == b.first.costs());
                   CHECK(a.first.feature_data() == b.first.feature_data());
                   CHECK(a.second.marginal == b.second.marginal);
               });

    const auto [ds, gt] = gen_mtbap_dataset(cfg);
    TrainConfig tcfg;
    tcfg.learning_rate = 5.0;
    tcfg.epochs = 30;
    tcfg.batch_size = 4096;
    both_modes(
        [&] { return train(Scorer::make_tabular(ds, 2), ds, LossKind::dpm, tcfg); },
        [](const TrainResult& a, const TrainResult& b) {
            CHECK(a.scorer.params() == b.scorer.params());
            CHECK(a.loss_trace == b.loss_trace);
        });

    both_modes([&] { return mt_aucc(mt_cost_curve(build_quintuples(ds, gt.marginal))); },
               [](double a, double b) { CHECK(a == b); });

    both_modes([&] { return eom(ds, PolicyTable{std::vector<int>(ds.total(), 1)}); },
               [](const auto& a, const auto& b) {
                   CHECK(a.first == b.first);
                   CHECK(a.second == b.second);
               });
}

TEST_CASE("dual search decisions are mode-independent") {
    Rng rng(64);
    const std::size_t m = 20000;
    const int L = 4;
    std::vector<double> r, c;
    r.reserve(m * L);
    c.reserve(m * L);
    for (std::size_t i = 0; i < m; ++i) {
        double ri = rng.uniform(0.5, 1.5), ci = 0.0;
        r.push_back(ri);
        c.push_back(ci);
        for (int h = 0; h < L - 1; ++h) {
            const double dc = rng.uniform(0.3, 1.5);
            const double u = (L - 2 - h + rng.uniform(0.15, 0.85)) / (L - 1);
            ci += dc;
            ri += (0.05 + 0.9 * u) * dc;
            r.push_back(ri);
            c.push_back(ci);
        }
    }
    const MultiTreatmentInstance inst(r, c, m, L);
    double top = 0.0;
    for (std::size_t i = 0; i < m; ++i) top += inst.c(i, L - 1);
    both_modes([&] { return lagrangian_mtbap(inst, 0.4 * top, 1e-3); },
               [](const DualSearchResult& a, const DualSearchResult& b) {
                   CHECK(a.allocation.chosen == b.allocation.chosen);
                   CHECK(a.allocation.consumed_cost == b.allocation.consumed_cost);
                   CHECK(a.alpha_star == b.alpha_star);
               });
}
