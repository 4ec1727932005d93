#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <limits>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace uplift::par {

enum class Mode { serial, openmp };

Mode mode();
void set_mode(Mode m);
bool openmp_compiled();
int max_threads();

// Fixed block size shared by every reduction. Both execution modes use the
// same summation tree (sequential within a block, block totals combined in
// index order), so results are bitwise identical for any thread count.
inline constexpr std::size_t block_size = 4096;

namespace detail {
inline std::size_t block_count(std::size_t n) {
    return n == 0 ? 0 : (n - 1) / block_size + 1;
}
}  // namespace detail

// total = sum over i in [0, n) of term(i)
template <typename F>
double block_sum(std::size_t n, F&& term) {
    const std::size_t nb = detail::block_count(n);
    double total = 0.0;
#ifdef _OPENMP
    if (mode() == Mode::openmp && nb > 1) {
        std::vector<double> partial(nb);
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nb); ++b) {
            const std::size_t lo = static_cast<std::size_t>(b) * block_size;
            const std::size_t hi = std::min(n, lo + block_size);
            double acc = 0.0;
            for (std::size_t i = lo; i < hi; ++i) acc += term(i);
            partial[static_cast<std::size_t>(b)] = acc;
        }
        for (const double p : partial) total += p;
        return total;
    }
#endif
    for (std::size_t b = 0; b < nb; ++b) {
        const std::size_t lo = b * block_size;
        const std::size_t hi = std::min(n, lo + block_size);
        double acc = 0.0;
        for (std::size_t i = lo; i < hi; ++i) acc += term(i);
        total += acc;
    }
    return total;
}

// K simultaneous accumulators in one pass; term(i) returns std::array<double, K>.
template <std::size_t K, typename F>
std::array<double, K> block_sum_arr(std::size_t n, F&& term) {
    const std::size_t nb = detail::block_count(n);
    std::array<double, K> total{};
#ifdef _OPENMP
    if (mode() == Mode::openmp && nb > 1) {
        std::vector<std::array<double, K>> partial(nb);
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nb); ++b) {
            const std::size_t lo = static_cast<std::size_t>(b) * block_size;
            const std::size_t hi = std::min(n, lo + block_size);
            std::array<double, K> acc{};
            for (std::size_t i = lo; i < hi; ++i) {
                const std::array<double, K> t = term(i);
                for (std::size_t k = 0; k < K; ++k) acc[k] += t[k];
            }
            partial[static_cast<std::size_t>(b)] = acc;
        }
        for (const auto& p : partial)
            for (std::size_t k = 0; k < K; ++k) total[k] += p[k];
        return total;
    }
#endif
    for (std::size_t b = 0; b < nb; ++b) {
        const std::size_t lo = b * block_size;
        const std::size_t hi = std::min(n, lo + block_size);
        std::array<double, K> acc{};
        for (std::size_t i = lo; i < hi; ++i) {
            const std::array<double, K> t = term(i);
            for (std::size_t k = 0; k < K; ++k) acc[k] += t[k];
        }
        for (std::size_t k = 0; k < K; ++k) total[k] += acc[k];
    }
    return total;
}

// max is exactly associative, so a plain blocked max suffices.
template <typename F>
double block_max(std::size_t n, F&& term) {
    const std::size_t nb = detail::block_count(n);
    double best = -std::numeric_limits<double>::infinity();
#ifdef _OPENMP
    if (mode() == Mode::openmp && nb > 1) {
        std::vector<double> partial(nb);
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nb); ++b) {
            const std::size_t lo = static_cast<std::size_t>(b) * block_size;
            const std::size_t hi = std::min(n, lo + block_size);
            double acc = -std::numeric_limits<double>::infinity();
            for (std::size_t i = lo; i < hi; ++i) acc = std::max(acc, term(i));
            partial[static_cast<std::size_t>(b)] = acc;
        }
        for (const double p : partial) best = std::max(best, p);
        return best;
    }
#endif
    for (std::size_t i = 0; i < n; ++i) best = std::max(best, term(i));
    return best;
}

// Independent per-index writes; body(i) must not touch shared state.
template <typename F>
void parallel_for(std::size_t n, F&& body) {
#ifdef _OPENMP
    if (mode() == Mode::openmp && n >= block_size) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
            body(static_cast<std::size_t>(i));
        return;
    }
#endif
    for (std::size_t i = 0; i < n; ++i) body(i);
}

}  // namespace uplift::par
