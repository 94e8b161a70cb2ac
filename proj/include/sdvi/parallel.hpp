// SPDX-License-Identifier: MIT
//
// Static-partition parallel loop. Index i always runs the same computation
// regardless of worker count; callers write into per-index slots and reduce
// afterwards in index order, which keeps results bitwise reproducible.
#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace sdvi {

/// Calls body(worker, i) for every i in [0, n). Exceptions are rethrown for the
/// lowest failing index so the reported error does not depend on scheduling.
template <class Body>
void parallel_for(std::size_t n, int workers, Body&& body) {
    const std::size_t w = std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), n));
    std::vector<std::exception_ptr> errors(w);
    std::vector<std::size_t> failed_at(w, n);
    auto chunk = [&](std::size_t id) {
        const std::size_t lo = n * id / w;
        const std::size_t hi = n * (id + 1) / w;
        for (std::size_t i = lo; i < hi; ++i) {
            try {
                body(id, i);
            } catch (...) {
                errors[id] = std::current_exception();
                failed_at[id] = i;
                return;
            }
        }
    };
    if (w == 1) {
        chunk(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(w - 1);
        for (std::size_t id = 1; id < w; ++id) pool.emplace_back(chunk, id);
        chunk(0);
        for (auto& th : pool) th.join();
    }
    const auto first = std::min_element(failed_at.begin(), failed_at.end());
    if (*first < n) std::rethrow_exception(errors[static_cast<std::size_t>(first - failed_at.begin())]);
}

}  // namespace sdvi
