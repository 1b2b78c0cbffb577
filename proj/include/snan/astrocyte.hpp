#ifndef SNAN_ASTROCYTE_HPP
#define SNAN_ASTROCYTE_HPP

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "snan/compartment.hpp"

namespace snan {

// The astrocyte is four chained compartments stepped in order each tick:
//   SR  - spiking input integrator fed by presynaptic spikes
//   IP3 - slow spiking integrator of SR spikes; its spike is a calcium-wave
//         event and injects a one-shot impulse into SIC
//   SIC - non-spiking voltage envelope decaying by sic_decay per step
//   SG  - spiking discretizer fed the SIC voltage, emits the burst
struct AstrocyteConfig {
    CompartmentConfig sr{4096, 0, 64, 0, 0, true};
    CompartmentConfig ip3{4096, 0, 3000, 0, 0, true};
    std::int32_t ip3_sensitivity = 8;     // SR spike -> IP3 input weight
    std::int32_t ip3_to_sic_weight = 64;  // IP3 spike -> SIC impulse
    std::int32_t sic_decay = 128;         // envelope decay per step
    std::int32_t sg_threshold = 64;

    CompartmentConfig sic_compartment() const {
        return CompartmentConfig{4096, sic_decay, 1, 0, 0, false};
    }
    CompartmentConfig sg_compartment() const {
        return CompartmentConfig{4096, 0, sg_threshold, 0, 0, true};
    }
};

// Per-compartment low-level settings; any field set here wins over the
// table-derived configuration.
struct AstrocyteOverrides {
    std::optional<std::int32_t> sr_threshold;
    std::optional<std::int32_t> sr_current_decay;
    std::optional<std::int32_t> sr_voltage_decay;
    std::optional<std::int32_t> sr_refractory_steps;
    std::optional<std::int32_t> ip3_threshold;
    std::optional<std::int32_t> ip3_voltage_decay;
    std::optional<std::int32_t> ip3_to_sic_weight;
    std::optional<std::int32_t> sic_decay;
    std::optional<std::int32_t> sg_threshold;
};

// Default targets are exactly realizable in the default table
// (ip3_to_sic_weight 256, sic decay 64, sg threshold 1024).
struct AstrocytePrototype {
    std::int32_t ip3_sensitivity = 8;
    double sic_amplitude = 200.0;  // Hz, peak SG rate
    double sic_window = 112.0;     // ms, first-to-last SG spike
    AstrocyteOverrides low_level;
};

struct AstrocyteStepResult {
    bool sr_spiked = false;
    bool ip3_spiked = false;
    bool sg_spiked = false;
};

struct AstrocyteInstance {
    AstrocyteConfig cfg;
    CompartmentState sr;
    CompartmentState ip3;
    CompartmentState sic;
    CompartmentState sg;

    AstrocyteStepResult step(std::int32_t presyn_input) {
        AstrocyteStepResult r;
        r.sr_spiked = step_compartment(sr, cfg.sr, presyn_input);
        r.ip3_spiked = step_compartment(ip3, cfg.ip3, r.sr_spiked ? cfg.ip3_sensitivity : 0);
        step_compartment(sic, cfg.sic_compartment(), r.ip3_spiked ? cfg.ip3_to_sic_weight : 0);
        r.sg_spiked = step_compartment(sg, cfg.sg_compartment(), sic.voltage);
        return r;
    }

    void reset() {
        sr = {};
        ip3 = {};
        sic = {};
        sg = {};
    }
};

// ---------------------------------------------------------------------------
// SIC parameter compilation table

struct SicConfigRow {
    std::int32_t ip3_to_sic_weight = 0;
    std::int32_t sic_current_decay = 0;
    std::int32_t sg_threshold = 0;
    double measured_amplitude_hz = 0.0;
    double measured_window_ms = 0.0;

    std::tuple<std::int32_t, std::int32_t, std::int32_t> triple() const {
        return {ip3_to_sic_weight, sic_current_decay, sg_threshold};
    }
};

struct SicConfigTable {
    std::vector<SicConfigRow> rows;
};

struct SicMeasurement {
    double amplitude_hz = 0.0;
    double window_ms = 0.0;
    int spike_count = 0;
};

// Response of an isolated SIC+SG pair to a single IP3 impulse. The envelope
// is integer-valued, so it reaches exactly zero and the burst is finite.
// Returns nothing if the configuration yields no SG spike.
inline std::optional<SicMeasurement> measure_sic_response(std::int32_t impulse_weight,
                                                          std::int32_t sic_decay,
                                                          std::int32_t sg_threshold,
                                                          double dt_ms = 1.0,
                                                          long max_steps = 200000) {
    const CompartmentConfig sic_cfg{4096, sic_decay, 1, 0, 0, false};
    const CompartmentConfig sg_cfg{4096, 0, sg_threshold, 0, 0, true};
    CompartmentState sic{};
    CompartmentState sg{};

    long first_spike = -1;
    long last_spike = -1;
    long shortest_isi = -1;
    int spikes = 0;

    for (long t = 0; t < max_steps; ++t) {
        step_compartment(sic, sic_cfg, t == 0 ? impulse_weight : 0);
        const bool sg_spiked = step_compartment(sg, sg_cfg, sic.voltage);
        if (sg_spiked) {
            if (first_spike < 0) {
                first_spike = t;
            } else {
                const long isi = t - last_spike;
                if (shortest_isi < 0 || isi < shortest_isi) shortest_isi = isi;
            }
            last_spike = t;
            spikes += 1;
        }
        if (sic.voltage == 0 && t > 0) break; // envelope spent; SG frozen below threshold
    }

    if (spikes == 0) return std::nullopt;

    SicMeasurement m;
    m.spike_count = spikes;
    if (spikes == 1) {
        m.amplitude_hz = 1000.0 / dt_ms; // rate ceiling for a degenerate burst
        m.window_ms = 0.0;
    } else {
        m.amplitude_hz = 1000.0 / (static_cast<double>(shortest_isi) * dt_ms);
        m.window_ms = static_cast<double>(last_spike - first_spike) * dt_ms;
    }
    return m;
}

inline std::vector<std::int32_t> default_sic_weight_range() {
    std::vector<std::int32_t> v;
    for (int e = 0; e <= 10; ++e) v.push_back(1 << e);
    return v;
}

inline std::vector<std::int32_t> default_sic_decay_range() {
    return {64, 128, 256, 512, 1024, 2048, 4096};
}

inline std::vector<std::int32_t> default_sic_threshold_range() {
    std::vector<std::int32_t> v;
    for (int e = 4; e <= 10; ++e) v.push_back(1 << e);
    return v;
}

// Brute-force sweep over the configuration grid. Work is split across
// threads and merged in sorted order, so the table does not depend on the
// worker count.
inline SicConfigTable build_sic_table(const std::vector<std::int32_t>& weights,
                                      const std::vector<std::int32_t>& decays,
                                      const std::vector<std::int32_t>& thresholds,
                                      unsigned n_threads = 0, double dt_ms = 1.0) {
    if (weights.empty() || decays.empty() || thresholds.empty()) {
        throw std::invalid_argument("build_sic_table: empty parameter range");
    }
    if (dt_ms <= 0.0) {
        throw std::invalid_argument("build_sic_table: dt_ms must be positive");
    }

    // duplicate range entries would break the no-duplicate-triples invariant
    auto dedup = [](std::vector<std::int32_t> v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        return v;
    };
    const auto ws = dedup(weights);
    const auto ds = dedup(decays);
    const auto ths = dedup(thresholds);

    std::vector<std::tuple<std::int32_t, std::int32_t, std::int32_t>> grid;
    grid.reserve(ws.size() * ds.size() * ths.size());
    for (auto w : ws)
        for (auto d : ds)
            for (auto th : ths) grid.emplace_back(w, d, th);

    if (n_threads == 0) {
        n_threads = std::max(1u, std::thread::hardware_concurrency());
    }
    n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(grid.size()));

    std::vector<std::vector<SicConfigRow>> partial(n_threads);
    auto worker = [&](unsigned tid) {
        for (std::size_t i = tid; i < grid.size(); i += n_threads) {
            const auto [w, d, th] = grid[i];
            if (auto m = measure_sic_response(w, d, th, dt_ms)) {
                partial[tid].push_back({w, d, th, m->amplitude_hz, m->window_ms});
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned tid = 1; tid < n_threads; ++tid) pool.emplace_back(worker, tid);
    worker(0);
    for (auto& th : pool) th.join();

    SicConfigTable table;
    for (auto& part : partial)
        table.rows.insert(table.rows.end(), part.begin(), part.end());
    std::sort(table.rows.begin(), table.rows.end(), [](const SicConfigRow& a, const SicConfigRow& b) {
        if (a.measured_amplitude_hz != b.measured_amplitude_hz)
            return a.measured_amplitude_hz < b.measured_amplitude_hz;
        if (a.measured_window_ms != b.measured_window_ms)
            return a.measured_window_ms < b.measured_window_ms;
        return a.triple() < b.triple();
    });
    return table;
}

// Nearest configuration under squared-distance cost; ties resolve to the
// lexicographically smallest parameter triple.
inline const SicConfigRow& lookup_sic_config(const SicConfigTable& table,
                                             double target_amplitude_hz,
                                             double target_window_ms) {
    if (table.rows.empty()) {
        throw std::runtime_error("lookup_sic_config: empty table");
    }
    const SicConfigRow* best = nullptr;
    double best_cost = 0.0;
    for (const auto& row : table.rows) {
        const double da = target_amplitude_hz - row.measured_amplitude_hz;
        const double dw = target_window_ms - row.measured_window_ms;
        const double cost = da * da + dw * dw;
        if (best == nullptr || cost < best_cost ||
            (cost == best_cost && row.triple() < best->triple())) {
            best = &row;
            best_cost = cost;
        }
    }
    return *best;
}

// Realize a prototype: the (amplitude, window) pair picks the nearest table
// row, then low-level overrides are applied on top.
inline AstrocyteConfig realize_prototype(const AstrocytePrototype& proto,
                                         const SicConfigTable& table) {
    if (proto.sic_window <= 0.0 || proto.sic_amplitude * proto.sic_window / 1000.0 < 1.0) {
        throw std::invalid_argument("astrocyte prototype: sic_amplitude*sic_window must allow >= 1 spike");
    }
    AstrocyteConfig cfg;
    cfg.ip3_sensitivity = proto.ip3_sensitivity;
    const SicConfigRow& row = lookup_sic_config(table, proto.sic_amplitude, proto.sic_window);
    cfg.ip3_to_sic_weight = row.ip3_to_sic_weight;
    cfg.sic_decay = row.sic_current_decay;
    cfg.sg_threshold = row.sg_threshold;

    const AstrocyteOverrides& ov = proto.low_level;
    if (ov.sr_threshold) cfg.sr.threshold = *ov.sr_threshold;
    if (ov.sr_current_decay) cfg.sr.current_decay = *ov.sr_current_decay;
    if (ov.sr_voltage_decay) cfg.sr.voltage_decay = *ov.sr_voltage_decay;
    if (ov.sr_refractory_steps) cfg.sr.refractory_steps = *ov.sr_refractory_steps;
    if (ov.ip3_threshold) cfg.ip3.threshold = *ov.ip3_threshold;
    if (ov.ip3_voltage_decay) cfg.ip3.voltage_decay = *ov.ip3_voltage_decay;
    if (ov.ip3_to_sic_weight) cfg.ip3_to_sic_weight = *ov.ip3_to_sic_weight;
    if (ov.sic_decay) cfg.sic_decay = *ov.sic_decay;
    if (ov.sg_threshold) cfg.sg_threshold = *ov.sg_threshold;
    return cfg;
}

// ---------------------------------------------------------------------------
// Groups and tripartite connection masks

struct AstrocyteGroup {
    std::vector<AstrocytePrototype> prototypes;
    std::size_t size = 0;
    std::vector<std::size_t> prototype_map; // astrocyte index -> prototype index

    void validate() const {
        if (size == 0 || prototypes.empty()) {
            throw std::invalid_argument("astrocyte group: empty group or prototype list");
        }
        if (prototype_map.size() != size) {
            throw std::invalid_argument("astrocyte group: prototype_map size mismatch");
        }
        for (auto idx : prototype_map) {
            if (idx >= prototypes.size()) {
                throw std::invalid_argument("astrocyte group: prototype index out of range");
            }
        }
    }
};

// Boolean neuron-by-astrocyte selection with per-pair weights; weights are
// only meaningful where the mask is set.
struct ConnectionMask {
    std::size_t n_neurons = 0;
    std::size_t n_astrocytes = 0;
    std::vector<bool> connected;        // row-major [neuron][astrocyte]
    std::vector<std::int32_t> weights;

    ConnectionMask() = default;
    ConnectionMask(std::size_t neurons, std::size_t astrocytes)
        : n_neurons(neurons),
          n_astrocytes(astrocytes),
          connected(neurons * astrocytes, false),
          weights(neurons * astrocytes, 0) {}

    std::size_t at(std::size_t neuron, std::size_t astro) const {
        return neuron * n_astrocytes + astro;
    }
    void set(std::size_t neuron, std::size_t astro, std::int32_t weight) {
        connected[at(neuron, astro)] = true;
        weights[at(neuron, astro)] = weight;
    }
    bool is_connected(std::size_t neuron, std::size_t astro) const {
        return connected[at(neuron, astro)];
    }
    std::int32_t weight(std::size_t neuron, std::size_t astro) const {
        return weights[at(neuron, astro)];
    }
};

} // namespace snan

#endif
