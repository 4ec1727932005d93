#include "uplift/baseline.hpp"

#include <cmath>
#include <map>
#include <string>

#include "uplift/errors.hpp"
#include "uplift/parallel.hpp"

namespace uplift {

BaselineKind baseline_kind_from(const std::string& name) {
    if (name == "slearner_linear") return BaselineKind::slearner_linear;
    if (name == "slearner_tabular") return BaselineKind::slearner_tabular;
    throw ConfigError("unknown baseline '" + name + "'");
}

const char* to_string(BaselineKind k) {
    return k == BaselineKind::slearner_linear ? "slearner_linear" : "slearner_tabular";
}

namespace {

// Solves (G + ridge I) w = rhs in place via Cholesky; G is dim x dim SPD.
std::vector<double> solve_spd(std::vector<double> g, std::vector<double> rhs, int dim) {
    for (int i = 0; i < dim; ++i) g[static_cast<std::size_t>(i * dim + i)] += 1e-9;
    for (int i = 0; i < dim; ++i) {
        for (int j = 0; j <= i; ++j) {
            double sum = g[static_cast<std::size_t>(i * dim + j)];
            for (int k = 0; k < j; ++k)
                sum -= g[static_cast<std::size_t>(i * dim + k)] *
                       g[static_cast<std::size_t>(j * dim + k)];
            if (i == j) {
                if (sum <= 0.0) throw Error("normal equations not positive definite");
                g[static_cast<std::size_t>(i * dim + j)] = std::sqrt(sum);
            } else {
                g[static_cast<std::size_t>(i * dim + j)] =
                    sum / g[static_cast<std::size_t>(j * dim + j)];
            }
        }
    }
    for (int i = 0; i < dim; ++i) {
        double sum = rhs[static_cast<std::size_t>(i)];
        for (int k = 0; k < i; ++k)
            sum -= g[static_cast<std::size_t>(i * dim + k)] * rhs[static_cast<std::size_t>(k)];
        rhs[static_cast<std::size_t>(i)] = sum / g[static_cast<std::size_t>(i * dim + i)];
    }
    for (int i = dim - 1; i >= 0; --i) {
        double sum = rhs[static_cast<std::size_t>(i)];
        for (int k = i + 1; k < dim; ++k)
            sum -= g[static_cast<std::size_t>(k * dim + i)] * rhs[static_cast<std::size_t>(k)];
        rhs[static_cast<std::size_t>(i)] = sum / g[static_cast<std::size_t>(i * dim + i)];
    }
    return rhs;
}

ResponseModel fit_linear(const RctDataset& ds) {
    const int d = ds.feature_dim();
    const int dim = d + 2;  // [x, level, 1]
    std::vector<double> gram(static_cast<std::size_t>(dim * dim), 0.0);
    std::vector<double> rhs_r(static_cast<std::size_t>(dim), 0.0);
    std::vector<double> rhs_c(static_cast<std::size_t>(dim), 0.0);
    std::vector<double> row(static_cast<std::size_t>(dim));
    for (std::size_t i = 0; i < ds.total(); ++i) {
        const auto x = ds.features_of(i);
        for (int k = 0; k < d; ++k) row[static_cast<std::size_t>(k)] = x[static_cast<std::size_t>(k)];
        row[static_cast<std::size_t>(d)] = static_cast<double>(ds.treatment(i));
        row[static_cast<std::size_t>(d + 1)] = 1.0;
        for (int a = 0; a < dim; ++a) {
            for (int b = 0; b <= a; ++b)
                gram[static_cast<std::size_t>(a * dim + b)] +=
                    row[static_cast<std::size_t>(a)] * row[static_cast<std::size_t>(b)];
            rhs_r[static_cast<std::size_t>(a)] += row[static_cast<std::size_t>(a)] * ds.reward(i);
            rhs_c[static_cast<std::size_t>(a)] += row[static_cast<std::size_t>(a)] * ds.cost(i);
        }
    }
    for (int a = 0; a < dim; ++a)
        for (int b = a + 1; b < dim; ++b)
            gram[static_cast<std::size_t>(a * dim + b)] = gram[static_cast<std::size_t>(b * dim + a)];
    const std::vector<double> wr = solve_spd(gram, rhs_r, dim);
    const std::vector<double> wc = solve_spd(gram, rhs_c, dim);

    ResponseModel m;
    m.rows = ds.total();
    m.levels = ds.n_levels();
    m.r.resize(m.rows * static_cast<std::size_t>(m.levels));
    m.c.resize(m.rows * static_cast<std::size_t>(m.levels));
    par::parallel_for(m.rows, [&](std::size_t i) {
        const auto x = ds.features_of(i);
        double base_r = wr[static_cast<std::size_t>(d + 1)];
        double base_c = wc[static_cast<std::size_t>(d + 1)];
        for (int k = 0; k < d; ++k) {
            base_r += wr[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(k)];
            base_c += wc[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(k)];
        }
        for (int j = 0; j < m.levels; ++j) {
            m.r[i * static_cast<std::size_t>(m.levels) + static_cast<std::size_t>(j)] =
                base_r + wr[static_cast<std::size_t>(d)] * j;
            m.c[i * static_cast<std::size_t>(m.levels) + static_cast<std::size_t>(j)] =
                base_c + wc[static_cast<std::size_t>(d)] * j;
        }
    });
    return m;
}

ResponseModel fit_tabular(const RctDataset& ds) {
    const int L = ds.n_levels();
    std::map<std::vector<double>, int> keys;
    std::vector<int> key_of(ds.total());
    for (std::size_t i = 0; i < ds.total(); ++i) {
        const auto x = ds.features_of(i);
        const auto [it, fresh] =
            keys.emplace(std::vector<double>(x.begin(), x.end()), static_cast<int>(keys.size()));
        key_of[i] = it->second;
    }
    const std::size_t cells = keys.size() * static_cast<std::size_t>(L);
    std::vector<double> sum_r(cells, 0.0), sum_c(cells, 0.0);
    std::vector<std::int64_t> cnt(cells, 0);
    std::vector<double> lvl_r(static_cast<std::size_t>(L), 0.0),
        lvl_c(static_cast<std::size_t>(L), 0.0);
    for (std::size_t i = 0; i < ds.total(); ++i) {
        const std::size_t cell = static_cast<std::size_t>(key_of[i]) * static_cast<std::size_t>(L) +
                                 static_cast<std::size_t>(ds.treatment(i));
        sum_r[cell] += ds.reward(i);
        sum_c[cell] += ds.cost(i);
        ++cnt[cell];
        lvl_r[static_cast<std::size_t>(ds.treatment(i))] += ds.reward(i);
        lvl_c[static_cast<std::size_t>(ds.treatment(i))] += ds.cost(i);
    }
    for (int j = 0; j < L; ++j) {
        const auto n = ds.counts()[static_cast<std::size_t>(j)];
        if (n > 0) {
            lvl_r[static_cast<std::size_t>(j)] /= static_cast<double>(n);
            lvl_c[static_cast<std::size_t>(j)] /= static_cast<double>(n);
        }
    }
    ResponseModel m;
    m.rows = ds.total();
    m.levels = L;
    m.r.resize(m.rows * static_cast<std::size_t>(L));
    m.c.resize(m.rows * static_cast<std::size_t>(L));
    par::parallel_for(m.rows, [&](std::size_t i) {
        for (int j = 0; j < L; ++j) {
            const std::size_t cell =
                static_cast<std::size_t>(key_of[i]) * static_cast<std::size_t>(L) +
                static_cast<std::size_t>(j);
            const std::size_t out =
                i * static_cast<std::size_t>(L) + static_cast<std::size_t>(j);
            if (cnt[cell] > 0) {
                m.r[out] = sum_r[cell] / static_cast<double>(cnt[cell]);
                m.c[out] = sum_c[cell] / static_cast<double>(cnt[cell]);
            } else {  // empty cell: fall back to the level mean
                m.r[out] = lvl_r[static_cast<std::size_t>(j)];
                m.c[out] = lvl_c[static_cast<std::size_t>(j)];
            }
        }
    });
    return m;
}

}  // namespace

ResponseModel fit_slearner(const RctDataset& ds, BaselineKind kind) {
    return kind == BaselineKind::slearner_linear ? fit_linear(ds) : fit_tabular(ds);
}

}  // namespace uplift
