#ifndef COR_COMMON_HPP
#define COR_COMMON_HPP

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace cor {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Label value marking a point as an outlier (also its encoding in label files).
inline constexpr int kOutlier = -1;

/// Per-point labels in {0..K-1} plus kOutlier.
struct LabeledPartition {
    std::vector<int> labels;
    std::size_t K = 0;

    std::size_t size() const { return labels.size(); }

    std::size_t outlier_count() const
    {
        return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), kOutlier));
    }

    std::vector<std::size_t> cluster_sizes() const
    {
        std::vector<std::size_t> sizes(K, 0);
        for (int l : labels) {
            if (l != kOutlier)
                ++sizes.at(static_cast<std::size_t>(l));
        }
        return sizes;
    }

    /// Sorted indices of the points labeled kOutlier.
    std::vector<std::size_t> outliers() const
    {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] == kOutlier)
                out.push_back(i);
        }
        return out;
    }

    /// Throws unless every label is kOutlier or lies in [0, K).
    void validate() const
    {
        for (std::size_t i = 0; i < labels.size(); ++i) {
            const int l = labels[i];
            if (l != kOutlier && (l < 0 || static_cast<std::size_t>(l) >= K))
                throw Error("label " + std::to_string(l) + " at point " + std::to_string(i) +
                            " outside [0, " + std::to_string(K) + ")");
        }
    }

    bool operator==(const LabeledPartition&) const = default;
};

// splitmix64 finalizer, used to derive independent child seeds.
inline std::uint64_t mix_seed(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream)
{
    return mix_seed(mix_seed(master) ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

using Rng = std::mt19937_64;

/// Uniform integer in [lo, hi] by rejection; independent of the standard
/// library's distribution implementation.
inline std::uint64_t uniform_int(Rng& rng, std::uint64_t lo, std::uint64_t hi)
{
    const std::uint64_t span = hi - lo;
    if (span == ~std::uint64_t{0})
        return rng();
    const std::uint64_t range = span + 1;
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % range);
    std::uint64_t v;
    do {
        v = rng();
    } while (v >= limit);
    return lo + v % range;
}

/// Fisher-Yates shuffle driven by uniform_int, so permutations are portable.
template <class T>
void shuffle(std::vector<T>& v, Rng& rng)
{
    for (std::size_t i = v.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(uniform_int(rng, 0, i - 1));
        std::swap(v[i - 1], v[j]);
    }
}

inline std::size_t worker_count(std::size_t jobs)
{
    const std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    return std::max<std::size_t>(1, std::min(hw, jobs));
}

namespace detail {
inline thread_local bool in_parallel_region = false;
}

/// Runs fn(i) for i in [0, n) over contiguous blocks on worker threads.
/// fn must only write to per-index outputs; callers reduce afterwards in index
/// order so results do not depend on the thread count. Nested calls run inline.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn, std::size_t min_block = 2048)
{
    const std::size_t workers = detail::in_parallel_region
                                    ? 1
                                    : worker_count((n + min_block - 1) / std::max<std::size_t>(1, min_block));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::vector<std::jthread> threads;
    threads.reserve(workers);
    const std::size_t block = (n + workers - 1) / workers;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = w * block;
        const std::size_t end = std::min(n, begin + block);
        if (begin >= end)
            break;
        threads.emplace_back([&, begin, end] {
            detail::in_parallel_region = true;
            try {
                for (std::size_t i = begin; i < end; ++i)
                    fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
            }
        });
    }
    threads.clear();
    if (failure)
        std::rethrow_exception(failure);
}

} // namespace cor

#endif
