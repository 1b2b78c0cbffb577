#ifndef SNAN_POISSON_HPP
#define SNAN_POISSON_HPP

#include <algorithm>

#include "snan/rng.hpp"

namespace snan {

// Bernoulli-per-step spike source: p = rate * dt / 1000, clamped to [0, 1].
struct PoissonSource {
    double rate_hz = 0.0;
    double dt_ms = 1.0;
    Rng stream{0};

    double spike_probability() const {
        return std::clamp(rate_hz * dt_ms / 1000.0, 0.0, 1.0);
    }
};

inline bool poisson_spike(PoissonSource& src) {
    const double p = src.spike_probability();
    return src.stream.next_double() < p;
}

} // namespace snan

#endif
