#pragma once

#include <algorithm>
#include <thread>
#include <vector>

namespace texgs {

/// Splits [0, count) into `threads` contiguous bands and runs fn(begin, end, band)
/// for each. Band boundaries depend only on count and threads, so callers that merge
/// per-band results in band order get reproducible output.
template <class Fn>
void parallel_bands(int count, int threads, Fn&& fn) {
    threads = std::clamp(threads, 1, std::max(1, count));
    if (threads == 1) {
        fn(0, count, 0);
        return;
    }
    std::vector<std::jthread> workers;
    workers.reserve(threads);
    for (int band = 0; band < threads; ++band) {
        const int begin = static_cast<int>(static_cast<long long>(count) * band / threads);
        const int end = static_cast<int>(static_cast<long long>(count) * (band + 1) / threads);
        workers.emplace_back([&fn, begin, end, band] { fn(begin, end, band); });
    }
}

/// Clamped band count actually used by parallel_bands.
inline int band_count(int count, int threads) { return std::clamp(threads, 1, std::max(1, count)); }

} // namespace texgs
