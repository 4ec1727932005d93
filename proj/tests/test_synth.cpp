#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "uplift/errors.hpp"
#include "uplift/stats.hpp"
#include "uplift/synth.hpp"

using namespace uplift;

TEST_CASE("btap: zero noise reproduces the response surface exactly") {
    SynthConfig cfg;
    cfg.n = 4;
    cfg.d = 3;
    cfg.L = 2;
    cfg.noise_scale = 0.0;
    cfg.seed = 11;
    const auto [ds, gt] = gen_btap_dataset(cfg);
    for (std::size_t i = 0; i < ds.total(); ++i) {
        const int t = ds.treatment(i);
        CHECK(ds.reward(i) == gt.response_r_at(i, t));
        CHECK(ds.cost(i) == gt.response_c_at(i, t));
        // observed reward - base == t * cate_r
        CHECK(ds.reward(i) - gt.response_r_at(i, 0) ==
              doctest::Approx(t * gt.cate_r[i]).epsilon(1e-12));
        CHECK(gt.cate_r[i] > 0.0);
        CHECK(gt.cate_c[i] > 0.0);
    }
}

TEST_CASE("determinism: identical config gives bit-identical output") {
    SynthConfig cfg;
    cfg.n = 1000;
    cfg.d = 4;
    cfg.L = 3;
    cfg.noise_scale = 0.3;
    cfg.seed = 2024;
    const auto [ds1, gt1] = gen_mtbap_dataset(cfg);
    const auto [ds2, gt2] = gen_mtbap_dataset(cfg);
    CHECK(ds1.feature_data() == ds2.feature_data());
    CHECK(ds1.rewards() == ds2.rewards());
    CHECK(ds1.costs() == ds2.costs());
    CHECK(ds1.treatments() == ds2.treatments());
    CHECK(gt1.response_r == gt2.response_r);
    CHECK(gt1.marginal == gt2.marginal);
}

TEST_CASE("btap: group-mean uplift matches mean cate over seeds") {
    const int seeds = 50;
    std::vector<double> gaps;  // (observed uplift) - (true mean cate)
    for (int s = 0; s < seeds; ++s) {
        SynthConfig cfg;
        cfg.n = 2000;
        cfg.d = 3;
        cfg.L = 2;
        cfg.noise_scale = 0.05;
        cfg.seed = 5000 + static_cast<std::uint64_t>(s);
        const auto [ds, gt] = gen_btap_dataset(cfg);
        double r1 = 0.0, r0 = 0.0;
        double n1 = 0.0, n0 = 0.0;
        for (std::size_t i = 0; i < ds.total(); ++i) {
            if (ds.treatment(i) == 1) {
                r1 += ds.reward(i);
                ++n1;
            } else {
                r0 += ds.reward(i);
                ++n0;
            }
            }
        const double uplift = r1 / n1 - r0 / n0;
        CHECK(n1 > 0);
        CHECK(n0 > 0);
        double mean_cate = 0.0;
        for (const double v : gt.cate_r) mean_cate += v;
        mean_cate /= static_cast<double>(gt.cate_r.size());
        gaps.push_back(uplift - mean_cate);
    }
    const double m = stats::mean(gaps);
    const double se = std::sqrt(stats::sample_variance(gaps) / seeds);
    CHECK(std::abs(m) < 3.0 * se + 1e-12);
}

TEST_CASE("btap: propensity drives the assignment rate") {
    SynthConfig cfg;
    cfg.n = 10000;
    cfg.d = 2;
    cfg.L = 2;
    cfg.propensity = {0.5, 0.5};
    cfg.seed = 31;
    const auto [ds, gt] = gen_btap_dataset(cfg);
    const double share = static_cast<double>(ds.counts()[1]) / static_cast<double>(cfg.n);
    CHECK(share > 0.48);
    CHECK(share < 0.52);
}

TEST_CASE("mtbap: marginal utilities decrease strictly and denominators stay positive") {
    SynthConfig cfg;
    cfg.n = 500;
    cfg.d = 3;
    cfg.L = 5;
    cfg.noise_scale = 0.2;
    cfg.seed = 77;
    const auto [ds, gt] = gen_mtbap_dataset(cfg);
    for (std::size_t i = 0; i < cfg.n; ++i) {
        for (int h = 0; h + 1 < cfg.L - 1; ++h)
            CHECK(gt.marginal_at(i, h) > gt.marginal_at(i, h + 1));
        for (int j = 0; j + 1 < cfg.L; ++j) {
            CHECK(gt.response_c_at(i, j) < gt.response_c_at(i, j + 1));
            CHECK(gt.response_r_at(i, j) < gt.response_r_at(i, j + 1));
        }
        for (int h = 0; h < cfg.L - 1; ++h) {
            CHECK(gt.marginal_at(i, h) > cfg.ell_lo - 1e-12);
            CHECK(gt.marginal_at(i, h) < cfg.ell_hi + 1e-12);
        }
    }
}

TEST_CASE("mtbap: L=2 output carries the binary semantics") {
    SynthConfig cfg;
    cfg.n = 64;
    cfg.d = 2;
    cfg.L = 2;
    cfg.noise_scale = 0.0;
    cfg.seed = 123;
    const auto [ds, gt] = gen_mtbap_dataset(cfg);
    for (std::size_t i = 0; i < cfg.n; ++i) {
        CHECK(gt.cate_r[i] == doctest::Approx(gt.response_r_at(i, 1) - gt.response_r_at(i, 0)));
        CHECK(gt.marginal_at(i, 0) ==
              doctest::Approx(gt.cate_r[i] / gt.cate_c[i]).epsilon(1e-12));
    }
}

TEST_CASE("mtbap: zero noise, three levels, observations equal the response matrix") {
    SynthConfig cfg;
    cfg.n = 3;
    cfg.d = 2;
    cfg.L = 3;
    cfg.noise_scale = 0.0;
    cfg.seed = 9;
    const auto [ds, gt] = gen_mtbap_dataset(cfg);
    for (std::size_t i = 0; i < cfg.n; ++i) {
        CHECK(ds.reward(i) == gt.response_r_at(i, ds.treatment(i)));
        CHECK(ds.cost(i) == gt.response_c_at(i, ds.treatment(i)));
    }
}

TEST_CASE("randomization: treatment is uncorrelated with features at scale") {
    SynthConfig cfg;
    cfg.n = 100000;
    cfg.d = 4;
    cfg.L = 3;
    cfg.seed = 55;
    const auto [ds, gt] = gen_mtbap_dataset(cfg);
    std::vector<double> level(ds.total());
    for (std::size_t i = 0; i < ds.total(); ++i) level[i] = ds.treatment(i);
    for (int k = 0; k < cfg.d; ++k) {
        std::vector<double> fk(ds.total());
        for (std::size_t i = 0; i < ds.total(); ++i) fk[i] = ds.features_of(i)[static_cast<std::size_t>(k)];
        CHECK(std::abs(stats::pearson(level, fk)) < 0.05);
    }
}

TEST_CASE("stratified vocabulary mode balances every cell exactly") {
    SynthConfig cfg;
    cfg.n = 1200;
    cfg.d = 3;
    cfg.L = 3;
    cfg.vocab_size = 10;
    cfg.assignment = Assignment::stratified;
    cfg.seed = 4;
    const auto [ds, gt] = gen_mtbap_dataset(cfg);
    std::vector<int> cell(10 * 3, 0);
    for (std::size_t i = 0; i < ds.total(); ++i)
        ++cell[static_cast<std::size_t>(gt.key[i] * 3 + ds.treatment(i))];
    for (const int c : cell) CHECK(c == 40);
    // same key always carries the same feature vector and response row
    for (std::size_t i = 1; i < ds.total(); ++i) {
        if (gt.key[i] == gt.key[0]) {
            const auto a = ds.features_of(0);
            const auto b = ds.features_of(i);
            for (int k = 0; k < cfg.d; ++k) CHECK(a[static_cast<std::size_t>(k)] == b[static_cast<std::size_t>(k)]);
            CHECK(gt.response_r_at(i, 1) == gt.response_r_at(0, 1));
        }
    }
}

TEST_CASE("config validation") {
    SynthConfig cfg;
    cfg.n = 0;
    CHECK_THROWS_AS(gen_btap_dataset(cfg), ConfigError);
    cfg.n = 10;
    cfg.L = 2;
    cfg.propensity = {0.4, 0.7};
    CHECK_THROWS_AS(gen_btap_dataset(cfg), ConfigError);
    cfg.propensity = {1.0, 0.0};  // zero entry
    CHECK_THROWS_AS(gen_btap_dataset(cfg), ConfigError);
    cfg.propensity.clear();
    cfg.L = 3;
    CHECK_THROWS_AS(gen_btap_dataset(cfg), ConfigError);  // binary generator wants L = 2
    cfg.assignment = Assignment::stratified;
    CHECK_THROWS_AS(gen_mtbap_dataset(cfg), ConfigError);  // stratified needs a vocabulary
}

TEST_CASE("ground truth csv layouts") {
    SynthConfig cfg;
    cfg.n = 5;
    cfg.d = 2;
    cfg.L = 3;
    cfg.seed = 2;
    const auto [ds, gt] = gen_mtbap_dataset(cfg);
    write_ground_truth_csv(gt, "tmp_gt_multi.csv");
    std::ifstream in("tmp_gt_multi.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "r_0,r_1,r_2,c_0,c_1,c_2,l_0,l_1");
    std::size_t rows = 0;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == cfg.n);
    std::remove("tmp_gt_multi.csv");

    cfg.L = 2;
    const auto [ds2, gt2] = gen_btap_dataset(cfg);
    write_ground_truth_csv(gt2, "tmp_gt_bin.csv");
    std::ifstream in2("tmp_gt_bin.csv");
    std::getline(in2, header);
    CHECK(header == "cate_r,cate_c");
    std::remove("tmp_gt_bin.csv");
}
