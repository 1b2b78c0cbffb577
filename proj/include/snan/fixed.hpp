#ifndef SNAN_FIXED_HPP
#define SNAN_FIXED_HPP

#include <cmath>
#include <cstdint>
#include <limits>

namespace snan {

// Decay fractions are 12-bit: a state value x decays per step to
// x * (4096 - decay) / 4096, with the division truncating toward zero.
constexpr std::int32_t kDecayUnit = 4096;

constexpr std::int32_t kStateMax = std::numeric_limits<std::int32_t>::max();
constexpr std::int32_t kStateMin = std::numeric_limits<std::int32_t>::min();

inline std::int32_t saturate32(std::int64_t x) {
    if (x > kStateMax) return kStateMax;
    if (x < kStateMin) return kStateMin;
    return static_cast<std::int32_t>(x);
}

inline std::int32_t sat_add(std::int32_t a, std::int64_t b) {
    return saturate32(static_cast<std::int64_t>(a) + b);
}

// One decay step. C++ integer division truncates toward zero, so decayed
// magnitudes are non-increasing for either sign.
inline std::int32_t decay_mul(std::int32_t x, std::int32_t decay) {
    const std::int64_t kept = kDecayUnit - decay;
    return saturate32(static_cast<std::int64_t>(x) * kept / kDecayUnit);
}

// 12-bit multiplier equivalent to exp(-1/tau) per step.
inline std::int32_t decay_factor_from_tau(double tau_steps) {
    const double d = 4096.0 * std::exp(-1.0 / tau_steps);
    return static_cast<std::int32_t>(std::lround(d));
}

} // namespace snan

#endif
