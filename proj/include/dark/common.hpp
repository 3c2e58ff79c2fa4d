// Copyright (c) 2026 dark-engine contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace dark {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// DARK_CHECK(cond, "message " << value) -> throws dark::Error on failure.
#define DARK_CHECK(cond, msg)                                                  \
    do {                                                                       \
        if (!(cond)) {                                                         \
            std::ostringstream dark_check_os_;                                 \
            dark_check_os_ << msg;                                             \
            throw ::dark::Error(dark_check_os_.str());                         \
        }                                                                      \
    } while (0)

// Worker cap shared by all kernels. DARK_THREADS overrides the hardware count.
inline int max_threads() {
    static const int cached = [] {
        if (const char* env = std::getenv("DARK_THREADS")) {
            const int n = std::atoi(env);
            if (n >= 1) return n;
        }
        const unsigned hw = std::thread::hardware_concurrency();
        return hw == 0 ? 1 : static_cast<int>(hw);
    }();
    return cached;
}

// Runs fn(begin, end) over [0, total) split into fixed-size chunks.
// Chunk boundaries depend only on (total, grain), never on the worker count,
// so any reduction that combines per-chunk results in chunk order is
// reproducible across runs and thread settings. Chunks must write disjoint
// outputs.
template <typename Fn>
void parallel_for(std::int64_t total, std::int64_t grain, Fn&& fn) {
    if (total <= 0) return;
    if (grain < 1) grain = 1;
    const std::int64_t chunks = (total + grain - 1) / grain;
    const int workers = static_cast<int>(
        std::min<std::int64_t>(chunks, max_threads()));
    if (workers <= 1) {
        for (std::int64_t c = 0; c < chunks; ++c)
            fn(c * grain, std::min(total, (c + 1) * grain));
        return;
    }
    std::atomic<std::int64_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::int64_t c = next.fetch_add(1);
            if (c >= chunks) return;
            fn(c * grain, std::min(total, (c + 1) * grain));
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers) - 1);
    for (int t = 1; t < workers; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
}

} // namespace dark
