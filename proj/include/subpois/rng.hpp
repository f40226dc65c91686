#pragma once
// Reproducible random streams. A stream is fully determined by (seed, stream id);
// parallel drivers hand out stream ids by fixed block index, never by thread.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <random>
#include <thread>
#include <vector>

namespace subpois {

class RngStream {
public:
    using result_type = std::mt19937_64::result_type;

    RngStream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream), engine_(make_engine(seed, stream)) {}

    static constexpr result_type min() { return std::mt19937_64::min(); }
    static constexpr result_type max() { return std::mt19937_64::max(); }
    result_type operator()() { return engine_(); }

    // Uniform on the open interval (0, 1), safe to pass to log().
    double uniform_open() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1p-53; }

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream() const noexcept { return stream_; }

private:
    static std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
        return std::mt19937_64(seq);
    }

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::mt19937_64 engine_;
};

inline constexpr std::size_t kSampleBlock = 4096;

// Fills n outputs of fn(rng). Block b (outputs [b*kSampleBlock, (b+1)*kSampleBlock))
// always draws from RngStream(seed, b), so the result does not depend on `workers`.
template <class T, class Fn>
std::vector<T> generate_parallel(std::size_t n, std::uint64_t seed, unsigned workers, Fn fn) {
    std::vector<T> out(n);
    const std::size_t blocks = (n + kSampleBlock - 1) / kSampleBlock;
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        try {
            for (std::size_t b = next++; b < blocks; b = next++) {
                RngStream rng(seed, b);
                const std::size_t hi = std::min(n, (b + 1) * kSampleBlock);
                for (std::size_t i = b * kSampleBlock; i < hi; ++i) out[i] = fn(rng);
            }
        } catch (...) {
            next = blocks;
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    };
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(blocks, 1)));
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

} // namespace subpois
