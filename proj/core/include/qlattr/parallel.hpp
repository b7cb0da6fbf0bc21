#pragma once

#include <cstddef>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace qlattr {

/// Worker count from QLATTR_WORKERS, falling back to hardware concurrency.
inline int default_workers() {
    if (const char* env = std::getenv("QLATTR_WORKERS")) {
        int v = std::atoi(env);
        if (v >= 1) return v;
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

/// Static block split of [0, n) over `workers` threads. Callers are
/// responsible for making the per-index work order-independent so results
/// match the serial run exactly.
inline void parallel_for(std::size_t n, int workers,
                         const std::function<void(std::size_t begin, std::size_t end)>& body) {
    if (n == 0) return;
    if (workers < 1) workers = 1;
    const std::size_t nthreads = std::min<std::size_t>(workers, n);
    if (nthreads == 1) {
        body(0, n);
        return;
    }
    std::vector<std::thread> threads;
    threads.reserve(nthreads);
    const std::size_t chunk = (n + nthreads - 1) / nthreads;
    for (std::size_t t = 0; t < nthreads; ++t) {
        const std::size_t begin = t * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        threads.emplace_back([&body, begin, end] { body(begin, end); });
    }
    for (auto& th : threads) th.join();
}

} // namespace qlattr
