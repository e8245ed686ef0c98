#pragma once

#include <chrono>
#include <functional>
#include <type_traits>
#include <utility>

namespace btcf {

using Clock = std::chrono::steady_clock;

inline double elapsed_ms(Clock::time_point since) {
    return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

template <typename R>
struct Timed {
    R result;
    double elapsed_ms;
};

template <>
struct Timed<void> {
    double elapsed_ms;
};

/// Runs `operation` once and measures it on the monotonic clock.
template <typename F>
auto time_call(F&& operation) {
    using R = std::invoke_result_t<F>;
    const auto start = Clock::now();
    if constexpr (std::is_void_v<R>) {
        std::invoke(std::forward<F>(operation));
        return Timed<void>{elapsed_ms(start)};
    } else {
        R result = std::invoke(std::forward<F>(operation));
        const double ms = elapsed_ms(start);
        return Timed<R>{std::move(result), ms};
    }
}

}  // namespace btcf
