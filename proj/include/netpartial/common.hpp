#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>

namespace netpartial {

// Two error families map onto the CLI exit codes: bad input (2) and
// numerical breakdown (3).
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using NodeId = std::int32_t;

// ─── Seeds and counter-based random numbers ──────────────────────

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derive an independent child seed from a parent seed and a stream tag.
inline constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a,
                                           std::uint64_t b = 0) {
    return splitmix64(splitmix64(splitmix64(seed) ^ a) + b);
}

/// Uniform in [0,1) that depends only on (seed, i, j). Used for dyad coins so
/// graph sampling is independent of visiting order.
inline double counter_uniform(std::uint64_t seed, std::uint64_t i, std::uint64_t j) {
    const std::uint64_t h = derive_seed(seed, i, j);
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
    return Rng(derive_seed(seed, 0x5eedULL, stream));
}

// ─── Worker pool ─────────────────────────────────────────────────

/// Number of worker threads used by parallel loops (>= 1).
std::size_t thread_count();
void set_thread_count(std::size_t n);

/// Runs body(i) for i in [0, n). Callers must make each task write only to
/// its own slot so the result does not depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace netpartial
