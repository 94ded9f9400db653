#pragma once

#include <cstdlib>
#include <cstdint>
#include <functional>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace nsl {

enum class Exec { Serial, Parallel };

// Worker cap: NSL_THREADS if set to a positive integer, else hardware
// concurrency. Unparseable values fall back to the default rather than
// aborting a long run over an env typo.
inline int thread_budget() {
#ifdef _OPENMP
    int budget = omp_get_max_threads();
#else
    int budget = 1;
#endif
    if (const char* env = std::getenv("NSL_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) budget = int(v);
    }
    return budget;
}

template <typename Fn>
void for_each_index(std::size_t n, Exec mode, Fn&& fn) {
#ifdef _OPENMP
    if (mode == Exec::Parallel && thread_budget() > 1) {
        int threads = thread_budget();
#pragma omp parallel for schedule(static) num_threads(threads)
        for (long long i = 0; i < (long long)n; ++i) fn(std::size_t(i));
        return;
    }
#endif
    (void)mode;
    for (std::size_t i = 0; i < n; ++i) fn(i);
}

// Reduction with a fixed block structure: each block is summed serially,
// block partials are combined in index order. Serial and parallel modes
// therefore produce bitwise-identical results.
template <typename Fn>
double blocked_sum(std::size_t n, Exec mode, Fn&& term) {
    if (n == 0) return 0.0;
    const std::size_t blocks = n < 32 ? n : 32;
    std::vector<double> partial(blocks, 0.0);
    for_each_index(blocks, mode, [&](std::size_t b) {
        std::size_t lo = n * b / blocks;
        std::size_t hi = n * (b + 1) / blocks;
        double acc = 0.0;
        for (std::size_t i = lo; i < hi; ++i) acc += term(i);
        partial[b] = acc;
    });
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

}  // namespace nsl
