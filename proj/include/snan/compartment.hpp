#ifndef SNAN_COMPARTMENT_HPP
#define SNAN_COMPARTMENT_HPP

#include <cstdint>
#include <stdexcept>

#include "snan/fixed.hpp"

namespace snan {

// Two-stage current/voltage (CUBA) unit with 12-bit decay fractions.
// A non-spiking compartment never fires and exposes its voltage as an
// analog output instead.
struct CompartmentConfig {
    std::int32_t current_decay = 4096;   // [0, 4096]
    std::int32_t voltage_decay = 4096;   // [0, 4096]
    std::int32_t threshold = 100;        // > 0 when spiking
    std::int32_t bias = 0;               // added to voltage each step
    std::int32_t refractory_steps = 0;
    bool spiking = true;

    void validate() const {
        if (current_decay < 0 || current_decay > kDecayUnit || voltage_decay < 0 ||
            voltage_decay > kDecayUnit) {
            throw std::invalid_argument("compartment: decay fractions must lie in [0, 4096]");
        }
        if (spiking && threshold <= 0) {
            throw std::invalid_argument("compartment: spiking threshold must be positive");
        }
        if (refractory_steps < 0) {
            throw std::invalid_argument("compartment: refractory_steps must be non-negative");
        }
    }
};

struct CompartmentState {
    std::int32_t current = 0;
    std::int32_t voltage = 0;
    std::int32_t refractory_remaining = 0;
};

// One synchronous update. Current always integrates; the voltage is held at
// zero while refractory. Reset on spike is to zero, discarding overshoot.
inline bool step_compartment(CompartmentState& st, const CompartmentConfig& cfg,
                             std::int32_t synaptic_input) {
    st.current = sat_add(decay_mul(st.current, cfg.current_decay), synaptic_input);

    if (st.refractory_remaining > 0) {
        st.refractory_remaining -= 1;
        st.voltage = 0;
        return false;
    }

    st.voltage = saturate32(static_cast<std::int64_t>(decay_mul(st.voltage, cfg.voltage_decay)) +
                            st.current + cfg.bias);

    if (cfg.spiking && st.voltage >= cfg.threshold) {
        st.voltage = 0;
        st.refractory_remaining = cfg.refractory_steps;
        return true;
    }
    return false;
}

} // namespace snan

#endif
