// Reproducible chunked random streams for parallel Monte Carlo.
//
// Stream contract: the stream for chunk c of seed s is a pure function of
// (s, c). Workers never share generators, and estimators reduce chunk results
// in index order, so estimates are bit-identical for any worker count.
//
// Generator: xoshiro256++ seeded through SplitMix64; normals by Box-Muller
// (own implementation so results do not depend on the C++ runtime's
// std::normal_distribution).

#pragma once

#include <cmath>
#include <cstdint>
#include <thread>
#include <vector>

namespace landscape {

struct SplitMix64 {
    uint64_t state;

    explicit SplitMix64(uint64_t s) : state(s) {}

    uint64_t next() {
        uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
};

class RngStream {
  public:
    RngStream(uint64_t seed, uint64_t chunk) {
        SplitMix64 sm(seed ^ (0x9E3779B97F4A7C15ULL * (chunk + 1)));
        for (auto& w : s_) w = sm.next();
        spare_valid_ = false;
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // uniform in (0, 1); never exactly 0, safe inside log()
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double normal() {
        if (spare_valid_) {
            spare_valid_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        const double th = 2.0 * M_PI * uniform();
        spare_ = r * std::sin(th);
        spare_valid_ = true;
        return r * std::cos(th);
    }

  private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    uint64_t s_[4];
    double spare_ = 0.0;
    bool spare_valid_ = false;
};

namespace detail {

inline int mc_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("LANDSCAPE_THREADS")) {
        const int t = std::atoi(env);
        if (t > 0) return t;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

}  // namespace detail

// Runs body(chunk_index, stream) for chunks 0..n_chunks-1 in parallel and
// returns the per-chunk results indexed by chunk. Chunk c always sees
// RngStream(seed, c), whatever the worker count.
template <typename T, typename Body>
std::vector<T> chunked_map(uint64_t seed, long n_chunks, int threads, Body&& body) {
    std::vector<T> out(static_cast<size_t>(n_chunks));
    const int nt = static_cast<int>(
        std::max<long>(1, std::min<long>(detail::mc_threads(threads), n_chunks)));
    auto worker = [&](long begin, long end) {
        for (long c = begin; c < end; ++c) {
            RngStream rng(seed, static_cast<uint64_t>(c));
            out[static_cast<size_t>(c)] = body(c, rng);
        }
    };
    if (nt == 1) {
        worker(0, n_chunks);
    } else {
        std::vector<std::thread> pool;
        const long chunk = (n_chunks + nt - 1) / nt;
        for (int t = 0; t < nt; ++t) {
            const long b = t * chunk, e = std::min(n_chunks, b + chunk);
            if (b < e) pool.emplace_back(worker, b, e);
        }
        for (auto& th : pool) th.join();
    }
    return out;
}

}  // namespace landscape
