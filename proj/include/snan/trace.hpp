#ifndef SNAN_TRACE_HPP
#define SNAN_TRACE_HPP

#include <algorithm>
#include <cstdint>
#include <stdexcept>

#include "snan/fixed.hpp"

namespace snan {

// Exponentially decaying spike trace. Decay uses the 12-bit multiplier
// round(4096 * exp(-1/tau)); impulses saturate at trace_max.
struct Trace {
    std::int32_t value = 0;
    std::int32_t impulse = 16;
    std::int32_t tau = 2;          // steps
    std::int32_t trace_max = 127;
    std::int32_t mult = decay_factor_from_tau(2.0);

    static Trace make(std::int32_t impulse, std::int32_t tau, std::int32_t trace_max = 127) {
        if (impulse <= 0 || tau <= 0 || trace_max <= 0) {
            throw std::invalid_argument("trace: impulse, tau and trace_max must be positive");
        }
        Trace tr;
        tr.value = 0;
        tr.impulse = impulse;
        tr.tau = tau;
        tr.trace_max = trace_max;
        tr.mult = decay_factor_from_tau(static_cast<double>(tau));
        return tr;
    }
};

inline Trace update_trace(Trace tr, bool spiked_now) {
    tr.value = static_cast<std::int32_t>(static_cast<std::int64_t>(tr.value) * tr.mult / kDecayUnit);
    if (spiked_now) {
        tr.value = std::min(tr.value + tr.impulse, tr.trace_max);
    }
    return tr;
}

} // namespace snan

#endif
