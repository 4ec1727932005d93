#include "uplift/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "uplift/errors.hpp"
#include "uplift/parallel.hpp"
#include "uplift/rng.hpp"

namespace uplift {

namespace {

double softplus(double z) {
    if (z > 30.0) return z;
    return std::log1p(std::exp(z));
}

double dot(const std::vector<double>& w, const double* x, int d) {
    double acc = 0.0;
    for (int k = 0; k < d; ++k) acc += w[static_cast<std::size_t>(k)] * x[k];
    return acc;
}

void check_config(const SynthConfig& cfg, bool binary_only) {
    if (cfg.n == 0) throw ConfigError("n must be positive");
    if (cfg.d < 1) throw ConfigError("d must be >= 1");
    if (binary_only && cfg.L != 2) throw ConfigError("binary generator requires L = 2");
    if (cfg.L < 2) throw ConfigError("L must be >= 2");
    if (cfg.noise_scale < 0.0) throw ConfigError("noise_scale must be >= 0");
    if (!(cfg.ell_lo > 0.0 && cfg.ell_hi > cfg.ell_lo))
        throw ConfigError("marginal-utility range must satisfy 0 < lo < hi");
    if (!cfg.propensity.empty()) {
        if (static_cast<int>(cfg.propensity.size()) != cfg.L)
            throw ConfigError("propensity length must equal L");
        double sum = 0.0;
        for (const double p : cfg.propensity) {
            if (!(p > 0.0)) throw ConfigError("propensity entries must be positive");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("propensity must sum to 1");
    }
    if (cfg.assignment == Assignment::stratified) {
        if (cfg.vocab_size <= 0)
            throw ConfigError("stratified assignment requires a feature vocabulary");
        const std::size_t K = static_cast<std::size_t>(cfg.vocab_size);
        if (cfg.n % K != 0 || (cfg.n / K) % static_cast<std::size_t>(cfg.L) != 0)
            throw ConfigError(
                "stratified assignment needs n divisible by vocab_size * L");
    }
    if (cfg.vocab_size < 0) throw ConfigError("vocab_size must be >= 0");
}

std::vector<double> draw_weights(Rng& rng, int d, double scale) {
    std::vector<double> w(static_cast<std::size_t>(d));
    for (double& v : w) v = rng.normal() * scale;
    return w;
}

// Shared sampling skeleton: vocabulary vectors, key choice, level assignment.
struct Sampler {
    const SynthConfig& cfg;
    std::vector<double> vocab;     // K x d
    std::vector<double> cum_prop;  // cumulative propensity
    std::uint64_t key_stream = 0, level_stream = 0, feat_stream = 0, noise_stream = 0;

    explicit Sampler(const SynthConfig& c) : cfg(c) {
        key_stream = derive_seed(cfg.seed, "assign-key");
        level_stream = derive_seed(cfg.seed, "assign-level");
        feat_stream = derive_seed(cfg.seed, "features");
        noise_stream = derive_seed(cfg.seed, "noise");
        if (cfg.vocab_size > 0) {
            const std::uint64_t vstream = derive_seed(cfg.seed, "vocab");
            vocab.resize(static_cast<std::size_t>(cfg.vocab_size) *
                         static_cast<std::size_t>(cfg.d));
            for (int k = 0; k < cfg.vocab_size; ++k) {
                Rng r(item_seed(vstream, static_cast<std::uint64_t>(k)));
                for (int j = 0; j < cfg.d; ++j)
                    vocab[static_cast<std::size_t>(k) * static_cast<std::size_t>(cfg.d) +
                          static_cast<std::size_t>(j)] = r.uniform(-1.0, 1.0);
            }
        }
        cum_prop.resize(static_cast<std::size_t>(cfg.L));
        double acc = 0.0;
        for (int j = 0; j < cfg.L; ++j) {
            acc += cfg.propensity.empty() ? 1.0 / cfg.L
                                          : cfg.propensity[static_cast<std::size_t>(j)];
            cum_prop[static_cast<std::size_t>(j)] = acc;
        }
        cum_prop.back() = 1.0;
    }

    int key_of(std::size_t i) const {
        if (cfg.vocab_size <= 0) return -1;
        if (cfg.assignment == Assignment::stratified)
            return static_cast<int>(i % static_cast<std::size_t>(cfg.vocab_size));
        Rng r(item_seed(key_stream, i));
        return static_cast<int>(r.below(static_cast<std::uint64_t>(cfg.vocab_size)));
    }

    int level_of(std::size_t i) const {
        if (cfg.assignment == Assignment::stratified)
            return static_cast<int>((i / static_cast<std::size_t>(cfg.vocab_size)) %
                                    static_cast<std::size_t>(cfg.L));
        Rng r(item_seed(level_stream, i));
        const double u = r.uniform();
        for (int j = 0; j < cfg.L; ++j)
            if (u < cum_prop[static_cast<std::size_t>(j)]) return j;
        return cfg.L - 1;
    }

    // Feature vector for sample i into out (d doubles).
    void features_of(std::size_t i, int key, double* out) const {
        if (cfg.vocab_size > 0) {
            const double* v = vocab.data() +
                              static_cast<std::size_t>(key) * static_cast<std::size_t>(cfg.d);
            std::copy(v, v + cfg.d, out);
            return;
        }
        Rng r(item_seed(feat_stream, i));
        for (int j = 0; j < cfg.d; ++j) out[j] = r.uniform(-1.0, 1.0);
    }

    // Observed value = truth + clipped Gaussian noise. `slot` separates the
    // reward and cost noise draws of one sample.
    double observe(std::size_t i, int slot, double truth) const {
        if (cfg.noise_scale == 0.0) return truth;
        Rng r(item_seed(noise_stream, i * 2 + static_cast<std::size_t>(slot)));
        return std::max(0.0, truth + cfg.noise_scale * r.normal());
    }
};

std::pair<RctDataset, GroundTruth> generate(const SynthConfig& cfg, bool binary) {
    check_config(cfg, binary);
    const std::size_t n = cfg.n;
    const int d = cfg.d;
    const int L = cfg.L;
    const int heads = L - 1;
    Sampler sampler(cfg);

    // Response surface per key (vocabulary mode) or per sample (continuous).
    // Rows hold r_0..r_{L-1}, c_0..c_{L-1} with strictly increasing levels and
    // strictly decreasing per-step utility.
    std::vector<double> key_resp_r, key_resp_c;  // K x L when vocab mode
    std::vector<double> w_base_r, w_base_c, w_ell, w_tau_r_shift;
    std::vector<std::vector<double>> w_dc(static_cast<std::size_t>(heads));
    const std::uint64_t resp_stream = derive_seed(cfg.seed, "response");

    auto fill_row = [&](Rng& r, double* rr, double* cc, const double* x) {
        // Level-0 base; cost starts at zero so a zero budget stays feasible.
        double base_r;
        if (x == nullptr) {
            base_r = r.uniform(0.5, 1.5);
        } else {
            base_r = softplus(dot(w_base_r, x, d) + 1.0);
        }
        rr[0] = base_r;
        cc[0] = 0.0;
        for (int h = 0; h < heads; ++h) {
            double dc, ell;
            if (x == nullptr) {
                dc = r.uniform(0.5, 1.5);
                // Spaced descending draws: strictly decreasing with a gap of at
                // least 0.3/(L-1) of the range.
                const double u = (heads - 1 - h + r.uniform(0.15, 0.85)) / heads;
                ell = cfg.ell_lo + (cfg.ell_hi - cfg.ell_lo) * u;
            } else {
                dc = softplus(dot(w_dc[static_cast<std::size_t>(h)], x, d) + 1.0);
                const double a = heads > 1 ? 1.5 - 3.0 * h / (heads - 1) : 0.0;
                const double z = a + dot(w_ell, x, d);
                ell = cfg.ell_lo + (cfg.ell_hi - cfg.ell_lo) / (1.0 + std::exp(-z));
            }
            cc[h + 1] = cc[h] + dc;
            rr[h + 1] = rr[h] + ell * dc;
        }
    };

    if (cfg.vocab_size > 0) {
        const std::size_t K = static_cast<std::size_t>(cfg.vocab_size);
        key_resp_r.resize(K * static_cast<std::size_t>(L));
        key_resp_c.resize(K * static_cast<std::size_t>(L));
        for (std::size_t k = 0; k < K; ++k) {
            Rng r(item_seed(resp_stream, k));
            fill_row(r, key_resp_r.data() + k * static_cast<std::size_t>(L),
                     key_resp_c.data() + k * static_cast<std::size_t>(L), nullptr);
        }
    } else {
        Rng wr(derive_seed(cfg.seed, "weights"));
        const double scale = 1.0 / std::sqrt(static_cast<double>(d));
        w_base_r = draw_weights(wr, d, scale);
        w_base_c = draw_weights(wr, d, scale);
        w_ell = draw_weights(wr, d, 0.5 * scale);
        for (auto& w : w_dc) w = draw_weights(wr, d, scale);
    }

    std::vector<double> features(n * static_cast<std::size_t>(d));
    std::vector<int> treatment(n);
    std::vector<double> reward(n), cost(n);

    GroundTruth gt;
    gt.L = L;
    gt.n = n;
    gt.response_r.resize(n * static_cast<std::size_t>(L));
    gt.response_c.resize(n * static_cast<std::size_t>(L));
    gt.marginal.resize(n * static_cast<std::size_t>(heads));
    if (L == 2) {
        gt.cate_r.resize(n);
        gt.cate_c.resize(n);
    }
    if (cfg.vocab_size > 0) gt.key.resize(n);

    par::parallel_for(n, [&](std::size_t i) {
        const int key = sampler.key_of(i);
        const int level = sampler.level_of(i);
        double* x = features.data() + i * static_cast<std::size_t>(d);
        sampler.features_of(i, key, x);
        double* rr = gt.response_r.data() + i * static_cast<std::size_t>(L);
        double* cc = gt.response_c.data() + i * static_cast<std::size_t>(L);
        if (cfg.vocab_size > 0) {
            const double* kr =
                key_resp_r.data() + static_cast<std::size_t>(key) * static_cast<std::size_t>(L);
            const double* kc =
                key_resp_c.data() + static_cast<std::size_t>(key) * static_cast<std::size_t>(L);
            std::copy(kr, kr + L, rr);
            std::copy(kc, kc + L, cc);
            gt.key[i] = key;
        } else {
            Rng unused(0);
            fill_row(unused, rr, cc, x);
        }
        for (int h = 0; h < heads; ++h)
            gt.marginal[i * static_cast<std::size_t>(heads) + static_cast<std::size_t>(h)] =
                (rr[h + 1] - rr[h]) / (cc[h + 1] - cc[h]);
        if (L == 2) {
            gt.cate_r[i] = rr[1] - rr[0];
            gt.cate_c[i] = cc[1] - cc[0];
        }
        treatment[i] = level;
        reward[i] = sampler.observe(i, 0, rr[level]);
        cost[i] = sampler.observe(i, 1, cc[level]);
    });

    RctDataset ds(std::move(features), d, std::move(treatment), std::move(reward),
                  std::move(cost), L);
    return {std::move(ds), std::move(gt)};
}

}  // namespace

std::pair<RctDataset, GroundTruth> gen_btap_dataset(const SynthConfig& cfg) {
    return generate(cfg, /*binary=*/true);
}

std::pair<RctDataset, GroundTruth> gen_mtbap_dataset(const SynthConfig& cfg) {
    return generate(cfg, /*binary=*/false);
}

void write_ground_truth_csv(const GroundTruth& gt, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    char buf[40];
    auto cell = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    if (gt.L == 2 && !gt.cate_r.empty()) {
        out << "cate_r,cate_c\n";
        for (std::size_t i = 0; i < gt.n; ++i)
            out << cell(gt.cate_r[i]) << ',' << cell(gt.cate_c[i]) << '\n';
    } else {
        for (int j = 0; j < gt.L; ++j) out << "r_" << j << ',';
        for (int j = 0; j < gt.L; ++j) out << "c_" << j << ',';
        for (int h = 0; h < gt.L - 1; ++h) {
            out << "l_" << h;
            out << (h + 2 < gt.L ? ',' : '\n');
        }
        for (std::size_t i = 0; i < gt.n; ++i) {
            for (int j = 0; j < gt.L; ++j) out << cell(gt.response_r_at(i, j)) << ',';
            for (int j = 0; j < gt.L; ++j) out << cell(gt.response_c_at(i, j)) << ',';
            for (int h = 0; h < gt.L - 1; ++h) {
                out << cell(gt.marginal_at(i, h));
                out << (h + 2 < gt.L ? ',' : '\n');
            }
        }
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace uplift
