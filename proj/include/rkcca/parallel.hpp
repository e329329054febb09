#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <optional>
#include <thread>
#include <type_traits>
#include <vector>

namespace rkcca {

/// Evaluates f(0), ..., f(count-1) on up to `workers` threads. Results are
/// placed by index, so the output never depends on scheduling. If any call
/// throws, the exception of the lowest failing index is rethrown.
template <class F>
auto parallel_map(std::size_t count, unsigned workers, F &&f) -> std::vector<std::invoke_result_t<F &, std::size_t>> {
    using R = std::invoke_result_t<F &, std::size_t>;
    std::vector<std::optional<R>> slots(count);
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};

    auto drain = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                slots[i].emplace(f(i));
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const unsigned n_threads = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(count)));
    if (n_threads <= 1) {
        drain();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(n_threads);
        for (unsigned t = 0; t < n_threads; ++t) { pool.emplace_back(drain); }
    }
    for (const auto &e : errors) {
        if (e) { std::rethrow_exception(e); }
    }
    std::vector<R> out;
    out.reserve(count);
    for (auto &s : slots) { out.push_back(std::move(*s)); }
    return out;
}

}  // namespace rkcca
