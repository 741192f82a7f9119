#pragma once

#include <cstdint>
#include <random>

namespace offload {

// Seeded generator with hand-rolled uniform conversions so that draw
// sequences are identical across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform real in [0, 1).
    double next_unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform integer in [lo, hi], inclusive.
    std::int64_t next_int(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(engine_() % static_cast<std::uint64_t>(hi - lo + 1));
    }

    bool next_bool() { return next_unit() < 0.5; }

private:
    std::mt19937_64 engine_;
};

}  // namespace offload
