#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace sct {

// SplitMix64 mix; used to derive independent stream seeds from one master seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic per-worker stream: stream k of master seed m is independent of
// stream j != k and stable across runs.
inline std::mt19937_64 rng_stream(std::uint64_t master_seed, std::uint64_t stream_id) {
    std::uint64_t s = master_seed ^ (0xd1b54a32d192ed03ULL * (stream_id + 1));
    std::uint64_t a = splitmix64(s);
    std::uint64_t b = splitmix64(s);
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    return std::mt19937_64(seq);
}

// Uniform in [0,1). Hand-rolled so draws are identical across standard libraries.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_range(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

// Uniform integer in [0, n).
inline std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n) {
    return n == 0 ? 0 : static_cast<std::uint64_t>(uniform01(rng) * static_cast<double>(n)) % n;
}

// Box-Muller, one deviate per call (the spare is discarded to keep the
// draw sequence independent of call sites).
inline double gaussian(std::mt19937_64& rng) {
    double u1 = uniform01(rng);
    double u2 = uniform01(rng);
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

} // namespace sct
