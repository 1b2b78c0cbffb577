#ifndef SNAN_PLASTICITY_HPP
#define SNAN_PLASTICITY_HPP

#include <algorithm>
#include <cstdint>
#include <stdexcept>

#include "snan/trace.hpp"

namespace snan {

// Learning rules are sums of trace products. x0/y0 are the binary pre/post
// spike indicators of the current step; x1/y1/r1 are decaying trace values
// sampled after this step's trace update.

struct StdpParams {
    double a = 0x1.0p-5;  // potentiation rate
    double b = 0x1.0p-6;  // depression rate
};

inline double stdp_dw(int x0, int y0, std::int32_t x1, std::int32_t y1, const StdpParams& p) {
    return p.a * x1 * y0 - p.b * x0 * y1;
}

// Heterosynaptic depression gated by the astrocytic reward trace r1.
// Depresses on postsynaptic spikes, offset on presynaptic spikes, so busier
// presynaptic paths decay slower.
struct HsdParams {
    double c = 0x1.0p-2;
    double d = 0x1.0p-1;
};

inline double hsd_dw(int x0, int y0, std::int32_t r1, const HsdParams& p) {
    return -p.c * y0 * r1 + p.d * x0 * r1;
}

inline double combined_dw(double stdp_term, double hsd_term) {
    return stdp_term + hsd_term;
}

enum class RuleKind { none, stdp, combined, bhp };

struct TraceSet {
    Trace x1 = Trace::make(16, 2);
    Trace y1 = Trace::make(16, 2);
    Trace r1 = Trace::make(8, 2);
};

struct PlasticityParams {
    StdpParams stdp;
    HsdParams hsd;
    double w_min = -64.0;
    double w_max = 64.0;
};

inline double rule_dw(RuleKind kind, int x0, int y0, const TraceSet& tr,
                      const PlasticityParams& p) {
    switch (kind) {
    case RuleKind::stdp:
        return stdp_dw(x0, y0, tr.x1.value, tr.y1.value, p.stdp);
    case RuleKind::combined:
        return combined_dw(stdp_dw(x0, y0, tr.x1.value, tr.y1.value, p.stdp),
                           hsd_dw(x0, y0, tr.r1.value, p.hsd));
    default:
        return 0.0;
    }
}

// Bidirectional homeostatic plasticity on neuron-to-astrocyte weights.
// t accumulates presynaptic spikes as a long-term rate estimate; the weight
// moves only on gated epochs, every 2^k steps.
struct BhpParams {
    double a = 0x1.0p-6;
    double b = 0x1.0p-2;
    double c = 0x1.0p-3;
    double w_max = 16.0;
    int k = 4;
    double t_max = 1e9;

    void validate() const {
        if (a <= 0.0 || b <= 0.0 || c <= 0.0 || w_max <= 0.0 || t_max <= 0.0) {
            throw std::invalid_argument("bhp: rates, w_max and t_max must be positive");
        }
        if (k < 0 || k > 62) {
            throw std::invalid_argument("bhp: k must lie in [0, 62]");
        }
    }
};

struct BhpState {
    double t = 0.0;
    double w = 0.0;
    std::uint64_t epoch_counter = 0;
};

inline void bhp_step(BhpState& s, int x0, const BhpParams& p) {
    s.t = std::min(s.t + p.a * x0, p.t_max);
    s.epoch_counter += 1;
    const std::uint64_t period = std::uint64_t{1} << p.k;
    if (s.epoch_counter % period == 0) {
        s.w = std::clamp(s.w + p.b * (p.w_max - s.w) - p.c * s.t, 0.0, p.w_max);
    }
}

} // namespace snan

#endif
