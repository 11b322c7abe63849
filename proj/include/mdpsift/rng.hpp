#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace mdpsift {

// splitmix64 step; also used to derive independent per-stream seeds from a
// master seed so parallel episodes and replications stay uncorrelated.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t s = master;
    std::uint64_t z = splitmix64(s);
    s = z ^ (stream * 0x9e3779b97f4a7c15ULL);
    z = splitmix64(s);
    return z == 0 ? 0x1ULL : z;
}

// Uniform double in [0,1) from the generator's top 53 bits; avoids the
// implementation-defined std::uniform_real_distribution so that runs are
// reproducible across standard libraries.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Inverse-CDF draw over an explicit distribution in ascending index order.
// Zero-probability indices can never be returned; floating residue at u ~ 1
// falls back to the last positive-probability index.
inline int sample_index(const std::vector<double>& probs, double u) {
    double acc = 0.0;
    int last_positive = -1;
    for (int i = 0; i < static_cast<int>(probs.size()); ++i) {
        if (probs[i] <= 0.0) continue;
        last_positive = i;
        acc += probs[i];
        if (u < acc) return i;
    }
    return last_positive;
}

}  // namespace mdpsift
