#include "uplift/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "uplift/errors.hpp"
#include "uplift/parallel.hpp"

namespace uplift {

namespace {

constexpr double kScoreClamp = 30.0;

double clamp_score(double s) { return std::clamp(s, -kScoreClamp, kScoreClamp); }

double sigmoid(double s) {
    if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
    const double e = std::exp(s);
    return e / (1.0 + e);
}

// log(1 + e^s); s is already clamped.
double softplus(double s) { return std::log1p(std::exp(std::min(s, kScoreClamp))); }

struct GroupCounts {
    std::size_t n0 = 0, n1 = 0;
};

GroupCounts binary_counts(const BinaryBatch& b, bool require_both) {
    GroupCounts g;
    for (const int t : b.t) {
        if (t == 0)
            ++g.n0;
        else if (t == 1)
            ++g.n1;
        else
            throw BatchError("binary loss saw treatment level " + std::to_string(t));
    }
    if (g.n0 == 0 && g.n1 == 0) throw BatchError("empty batch");
    if (require_both && (g.n0 == 0 || g.n1 == 0))
        throw BatchError("batch must contain both treated and control samples");
    return g;
}

}  // namespace

LossGrad dum_loss_grad(std::span<const double> s, const BinaryBatch& b) {
    const std::size_t n = s.size();
    const GroupCounts g = binary_counts(b, /*require_both=*/true);
    const double inv1 = 1.0 / static_cast<double>(g.n1);
    const double inv0 = 1.0 / static_cast<double>(g.n0);

    // Signed per-sample weight v_i: +y^r/n1 treated, -y^r/n0 control.
    auto v = [&](std::size_t i) { return b.t[i] == 1 ? b.yr[i] * inv1 : -b.yr[i] * inv0; };

    const double smax = par::block_max(n, [&](std::size_t i) { return s[i]; });
    const double z = par::block_sum(n, [&](std::size_t i) { return std::exp(s[i] - smax); });
    const double lse = smax + std::log(z);

    const auto sums = par::block_sum_arr<2>(n, [&](std::size_t i) {
        return std::array<double, 2>{v(i) * s[i], v(i)};
    });
    const double vs = sums[0];
    const double vtot = sums[1];

    LossGrad out;
    // ln q_i = s_i - lse, so L = -sum_i v_i (s_i - lse).
    out.loss = -vs + vtot * lse;
    out.grad.resize(n);
    par::parallel_for(n, [&](std::size_t i) {
        const double q = std::exp(s[i] - lse);
        out.grad[i] = -v(i) + q * vtot;
    });
    return out;
}

LossGrad drp_loss_grad(std::span<const double> s, const BinaryBatch& b) {
    const std::size_t n = s.size();
    // An absent group simply contributes no terms (the hand-checkable
    // single-sample case relies on this).
    const GroupCounts g = binary_counts(b, /*require_both=*/false);
    const double inv1 = g.n1 ? 1.0 / static_cast<double>(g.n1) : 0.0;
    const double inv0 = g.n0 ? 1.0 / static_cast<double>(g.n0) : 0.0;

    auto w = [&](std::size_t i) { return b.t[i] == 1 ? inv1 : -inv0; };

    LossGrad out;
    out.grad.resize(n);
    const auto sums = par::block_sum_arr<2>(n, [&](std::size_t i) {
        const double sc = clamp_score(s[i]);
        // y^r ln(q/(1-q)) + y^c ln(1-q) = y^r s - y^c softplus(s).
        const double term = b.yr[i] * sc - b.yc[i] * softplus(sc);
        return std::array<double, 2>{w(i) * term, std::abs(s[i]) > kScoreClamp ? 1.0 : 0.0};
    });
    out.loss = -sums[0];
    out.saturated = static_cast<long long>(sums[1]);
    par::parallel_for(n, [&](std::size_t i) {
        const double q = sigmoid(clamp_score(s[i]));
        out.grad[i] = -w(i) * (b.yr[i] - q * b.yc[i]);
    });
    return out;
}

std::vector<double> drp_curvature(std::span<const double> s, const BinaryBatch& b) {
    const std::size_t n = s.size();
    const GroupCounts g = binary_counts(b, /*require_both=*/false);
    const double inv1 = g.n1 ? 1.0 / static_cast<double>(g.n1) : 0.0;
    const double inv0 = g.n0 ? 1.0 / static_cast<double>(g.n0) : 0.0;
    std::vector<double> h(n);
    par::parallel_for(n, [&](std::size_t i) {
        const double q = sigmoid(clamp_score(s[i]));
        const double w = b.t[i] == 1 ? inv1 : -inv0;
        h[i] = w * b.yc[i] * q * (1.0 - q);
    });
    return h;
}

LossGrad dpm_loss_grad(std::span<const double> s, const MultiBatch& b) {
    const std::size_t n = b.t.size();
    const int L = b.L;
    const std::size_t heads = static_cast<std::size_t>(L - 1);
    if (L < 2) throw BatchError("dpm needs at least 2 levels");
    if (s.size() != n * heads) throw BatchError("dpm score matrix has wrong shape");

    std::vector<std::size_t> count(static_cast<std::size_t>(L), 0);
    for (const int t : b.t) {
        if (t < 0 || t >= L)
            throw BatchError("dpm saw treatment level " + std::to_string(t));
        ++count[static_cast<std::size_t>(t)];
    }
    // A usable batch pairs at least one adjacent level: a head needs samples
    // on both of its sides to receive a two-sided signal. Terms of absent
    // levels simply do not arise.
    bool paired = false;
    for (int j = 0; j + 1 < L; ++j)
        if (count[static_cast<std::size_t>(j)] > 0 && count[static_cast<std::size_t>(j + 1)] > 0)
            paired = true;
    if (!paired) throw BatchError("dpm batch pairs no adjacent treatment levels");

    std::vector<double> inv(static_cast<std::size_t>(L), 0.0);
    for (int j = 0; j < L; ++j)
        if (count[static_cast<std::size_t>(j)] > 0)
            inv[static_cast<std::size_t>(j)] = 1.0 / static_cast<double>(count[static_cast<std::size_t>(j)]);

    auto term_value = [&](double q, double yr, double yc) { return q * yr - q * q * yc; };

    LossGrad out;
    out.grad.assign(n * heads, 0.0);
    const auto sums = par::block_sum_arr<2>(n, [&](std::size_t i) {
        const int t = b.t[i];
        double acc = 0.0;
        double sat = 0.0;
        if (t > 0) {
            const double raw = s[i * heads + static_cast<std::size_t>(t - 1)];
            if (std::abs(raw) > kScoreClamp) sat += 1.0;
            const double q = sigmoid(clamp_score(raw));
            acc -= inv[static_cast<std::size_t>(t)] * term_value(q, b.yr[i], b.yc[i]);
        }
        if (t < L - 1) {
            const double raw = s[i * heads + static_cast<std::size_t>(t)];
            if (std::abs(raw) > kScoreClamp) sat += 1.0;
            const double q = sigmoid(clamp_score(raw));
            acc += inv[static_cast<std::size_t>(t)] * term_value(q, b.yr[i], b.yc[i]);
        }
        return std::array<double, 2>{acc, sat};
    });
    out.loss = sums[0];
    out.saturated = static_cast<long long>(sums[1]);
    par::parallel_for(n, [&](std::size_t i) {
        const int t = b.t[i];
        if (t > 0) {
            const std::size_t idx = i * heads + static_cast<std::size_t>(t - 1);
            const double q = sigmoid(clamp_score(s[idx]));
            out.grad[idx] -= inv[static_cast<std::size_t>(t)] *
                             (b.yr[i] - 2.0 * q * b.yc[i]) * q * (1.0 - q);
        }
        if (t < L - 1) {
            const std::size_t idx = i * heads + static_cast<std::size_t>(t);
            const double q = sigmoid(clamp_score(s[idx]));
            out.grad[idx] += inv[static_cast<std::size_t>(t)] *
                             (b.yr[i] - 2.0 * q * b.yc[i]) * q * (1.0 - q);
        }
    });
    return out;
}

LossGrad direct_rank_loss_grad(std::span<const double> s, const BinaryBatch& b) {
    const std::size_t n = s.size();
    binary_counts(b, /*require_both=*/true);

    std::vector<double> q(n), p(n);
    par::parallel_for(n, [&](std::size_t i) { q[i] = std::tanh(s[i]); });

    // Within-group softmax of q.
    double qmax[2] = {
        par::block_max(n, [&](std::size_t i) {
            return b.t[i] == 0 ? q[i] : -std::numeric_limits<double>::infinity();
        }),
        par::block_max(n, [&](std::size_t i) {
            return b.t[i] == 1 ? q[i] : -std::numeric_limits<double>::infinity();
        })};
    const auto denom = par::block_sum_arr<2>(n, [&](std::size_t i) {
        std::array<double, 2> e{0.0, 0.0};
        e[static_cast<std::size_t>(b.t[i])] = std::exp(q[i] - qmax[b.t[i]]);
        return e;
    });
    par::parallel_for(n, [&](std::size_t i) {
        p[i] = std::exp(q[i] - qmax[b.t[i]]) / denom[static_cast<std::size_t>(b.t[i])];
    });

    // Group-wise p-weighted sums of rewards and costs.
    const auto gs = par::block_sum_arr<4>(n, [&](std::size_t i) {
        std::array<double, 4> a{0.0, 0.0, 0.0, 0.0};
        const std::size_t off = static_cast<std::size_t>(b.t[i]) * 2;
        a[off] = b.yr[i] * p[i];
        a[off + 1] = b.yc[i] * p[i];
        return a;
    });
    const double sr[2] = {gs[0], gs[2]};  // sum y^r p per group
    const double sc[2] = {gs[1], gs[3]};
    const double tau_r = sr[1] - sr[0];
    const double tau_c = sc[1] - sc[0];
    if (std::abs(tau_r) < 1e-9)
        throw DomainError("direct rank loss undefined: p-weighted incremental reward ~ 0");

    LossGrad out;
    out.loss = tau_c / tau_r;
    out.grad.resize(n);
    const double inv_tau_r2 = 1.0 / (tau_r * tau_r);
    par::parallel_for(n, [&](std::size_t i) {
        const int t = b.t[i];
        const double sign = t == 1 ? 1.0 : -1.0;
        const double dq = 1.0 - q[i] * q[i];
        const double dtr = sign * p[i] * (b.yr[i] - sr[t]) * dq;
        const double dtc = sign * p[i] * (b.yc[i] - sc[t]) * dq;
        out.grad[i] = (dtc * tau_r - tau_c * dtr) * inv_tau_r2;
    });
    return out;
}

}  // namespace uplift
