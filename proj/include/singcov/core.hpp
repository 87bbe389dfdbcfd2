#pragma once

#include <algorithm>
#include <atomic>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace singcov {

// Error categories. The CLI maps these onto exit codes: input/structure
// errors -> 1, numerical degeneracy -> 2, I/O -> 3.
struct input_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct structure_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct degeneracy_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A Monte Carlo draw hit a singular reduced matrix (possible only for
// rank-deficient inputs); the message names the offending sample index.
struct ensemble_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Seedable, splittable random stream. A stream is identified by
/// (seed, stream_id); identical identifiers reproduce identical draws and
/// distinct stream_ids give independent streams. Monte Carlo loops derive
/// one substream per sample index, so results do not depend on how samples
/// are scheduled across workers.
class RngStream {
public:
    RngStream() : RngStream(0, 0) {}
    RngStream(std::uint64_t seed, std::uint64_t stream_id)
        : seed_(seed), stream_id_(stream_id), engine_(make_engine(seed, stream_id)) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    /// Independent stream for substream index i (e.g. one per MC sample).
    RngStream substream(std::uint64_t i) const {
        return RngStream(seed_, mix(stream_id_, i));
    }

    std::mt19937_64& engine() { return engine_; }

    double normal() { return normal_(engine_); }

    /// Standard circularly-symmetric complex normal CN(0,1):
    /// real and imaginary parts are independent N(0, 1/2).
    std::complex<double> cnormal() {
        static constexpr double inv_sqrt2 = 0.70710678118654752440;
        return {normal_(engine_) * inv_sqrt2, normal_(engine_) * inv_sqrt2};
    }

    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(engine_);
    }

private:
    static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
        // splitmix64 finalizer over the pair; avoids substream collisions.
        std::uint64_t z = a + 0x9e3779b97f4a7c15ull + b * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    static std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream_id) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream_id),
                          static_cast<std::uint32_t>(stream_id >> 32)};
        return std::mt19937_64(seq);
    }

    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Worker cap shared by all parallel loops: explicit argument wins, then the
/// SINGCOV_THREADS environment variable, then hardware concurrency.
inline unsigned resolve_thread_count(unsigned requested = 0) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("SINGCOV_THREADS")) {
        long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

/// Runs fn(chunk_index) for chunk_index in [0, n_chunks) on up to `threads`
/// workers. Chunks own disjoint state; the caller merges them afterwards in
/// chunk order, so the result is independent of the worker count.
template <typename Fn>
void run_chunks(std::size_t n_chunks, unsigned threads, Fn&& fn) {
    threads = std::min<std::size_t>(std::max(1u, threads), n_chunks == 0 ? 1 : n_chunks);
    if (threads <= 1) {
        for (std::size_t c = 0; c < n_chunks; ++c) fn(c);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                std::size_t c = next.fetch_add(1);
                if (c >= n_chunks) break;
                fn(c);
            }
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace singcov
