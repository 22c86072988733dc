#ifndef HILL_PARALLEL_HPP
#define HILL_PARALLEL_HPP

#include <algorithm>
#include <thread>
#include <vector>

namespace hill {

// Static block partition of [0, n) over a fixed worker count. Deterministic:
// the result of each index does not depend on scheduling, and callers write
// to disjoint slots.
template <typename Fn>
void parallel_for(long long n, int jobs, Fn&& fn) {
    if (jobs <= 1 || n < 2) {
        for (long long i = 0; i < n; ++i) fn(i);
        return;
    }
    const int workers = std::min<long long>(jobs, n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const long long chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const long long lo = w * chunk;
        const long long hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (long long i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace hill

#endif
