#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace relab {

// SplitMix64 stream. Chosen over std::mt19937_64 + <random> distributions
// because the standard distributions are implementation-defined; every
// draw here is bit-reproducible across platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // [0, 1)
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // [0, n)
    int uniform_int(int n) {
        return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n));
    }

    // Box-Muller, two uniforms per draw (no cached spare, keeps the stream
    // position independent of call history).
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) {
            u1 = uniform();
        }
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    // Inverse-CDF draw from an unnormalized weight vector.
    int categorical(const std::vector<double>& weights) {
        double total = 0.0;
        for (double w : weights) {
            total += w;
        }
        double r = uniform() * total;
        for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
            r -= weights[i];
            if (r < 0.0) {
                return static_cast<int>(i);
            }
        }
        return static_cast<int>(weights.size()) - 1;
    }

private:
    std::uint64_t state_;
};

// Order-sensitive seed derivation for independent substreams, e.g.
// mix_seed(run_seed, step, instance_index, member_index, guided_flag).
inline std::uint64_t mix_seed(std::uint64_t a) {
    Rng r(a);
    return r.next_u64();
}

template <typename... Rest>
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, Rest... rest) {
    Rng r(a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
    if constexpr (sizeof...(rest) == 0) {
        return r.next_u64();
    } else {
        return mix_seed(r.next_u64(), static_cast<std::uint64_t>(rest)...);
    }
}

}  // namespace relab
