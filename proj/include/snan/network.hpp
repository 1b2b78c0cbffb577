#ifndef SNAN_NETWORK_HPP
#define SNAN_NETWORK_HPP

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "snan/astrocyte.hpp"
#include "snan/compartment.hpp"
#include "snan/plasticity.hpp"
#include "snan/poisson.hpp"
#include "snan/rng.hpp"

namespace snan {

struct SpikeEvent {
    long step = 0;
    std::uint32_t unit_id = 0;
};

enum class UnitKind { neuron, poisson, stim, astro_sr, astro_ip3, astro_sic, astro_sg };

struct Unit {
    UnitKind kind = UnitKind::neuron;
    CompartmentConfig cfg{};
    CompartmentState st{};
    PoissonSource src{};
    bool stim_now = false;
    std::size_t astro_index = static_cast<std::size_t>(-1);
};

struct Synapse {
    std::uint32_t pre = 0;
    std::uint32_t post = 0;
    double weight = 0.0;
    std::int32_t delay = 1;
    RuleKind rule = RuleKind::none;
    TraceSet traces{};
    BhpState bhp{};
};

struct RewardChannel {
    std::uint32_t source_unit = 0;          // an SG compartment
    std::vector<std::size_t> tagged;        // synapse indices
};

struct AstrocyteUnitIds {
    std::uint32_t sr = 0;
    std::uint32_t ip3 = 0;
    std::uint32_t sic = 0;
    std::uint32_t sg = 0;
};

// Synchronous discrete-time network. All spikes produced at step t are
// delivered at t + delay with delay >= 1, so the update is order-independent
// across units. Astrocytes are the one ordered construct: their four
// compartments chain within a single step.
class Network {
public:
    explicit Network(std::uint64_t seed) : master_(seed) {}

    std::uint32_t add_neuron(const CompartmentConfig& cfg) {
        cfg.validate();
        Unit u;
        u.kind = UnitKind::neuron;
        u.cfg = cfg;
        u.st.refractory_remaining = 0;
        return push_unit(u);
    }

    std::uint32_t add_poisson(double rate_hz, double dt_ms = 1.0) {
        Unit u;
        u.kind = UnitKind::poisson;
        u.src.rate_hz = rate_hz;
        u.src.dt_ms = dt_ms;
        u.src.stream = master_.fork(0x50500000ULL + n_sources_);
        n_sources_ += 1;
        return push_unit(u);
    }

    // Externally driven unit; spikes exactly on steps armed via set_stim.
    std::uint32_t add_stim() {
        Unit u;
        u.kind = UnitKind::stim;
        return push_unit(u);
    }

    std::size_t add_astrocyte(const AstrocyteConfig& cfg) {
        cfg.sr.validate();
        cfg.ip3.validate();
        cfg.sic_compartment().validate();
        cfg.sg_compartment().validate();
        AstrocyteInstance inst;
        inst.cfg = cfg;
        AstrocyteUnitIds ids;
        ids.sr = push_unit(make_astro_unit(UnitKind::astro_sr, astrocytes_.size()));
        ids.ip3 = push_unit(make_astro_unit(UnitKind::astro_ip3, astrocytes_.size()));
        ids.sic = push_unit(make_astro_unit(UnitKind::astro_sic, astrocytes_.size()));
        ids.sg = push_unit(make_astro_unit(UnitKind::astro_sg, astrocytes_.size()));
        astrocytes_.push_back(inst);
        astro_units_.push_back(ids);
        return astrocytes_.size() - 1;
    }

    std::size_t add_synapse(std::uint32_t pre, std::uint32_t post, double weight,
                            std::int32_t delay = 1, RuleKind rule = RuleKind::none) {
        require_unit(pre, "synapse pre");
        require_unit(post, "synapse post");
        if (units_[pre].kind == UnitKind::astro_sic) {
            throw std::invalid_argument("synapse pre references the non-spiking SIC compartment");
        }
        if (units_[post].kind != UnitKind::neuron && units_[post].kind != UnitKind::astro_sr) {
            throw std::invalid_argument("synapse post must be a neuron or an astrocyte SR compartment");
        }
        if (delay < 1) {
            throw std::invalid_argument("synapse delay must be >= 1 step");
        }
        if (now_ > 0 && delay + 1 > static_cast<std::int32_t>(pending_.size())) {
            throw std::invalid_argument("cannot extend maximum delay after stepping started");
        }
        Synapse s;
        s.pre = pre;
        s.post = post;
        s.weight = weight;
        s.delay = delay;
        s.rule = rule;
        s.traces.x1 = Trace::make(plasticity.x_impulse, plasticity.trace_tau);
        s.traces.y1 = Trace::make(plasticity.y_impulse, plasticity.trace_tau);
        s.traces.r1 = Trace::make(plasticity.r_impulse, plasticity.trace_tau);
        if (rule == RuleKind::bhp) s.bhp.w = weight;
        synapses_.push_back(s);
        outgoing_[pre].push_back(synapses_.size() - 1);
        max_delay_ = std::max(max_delay_, delay);
        return synapses_.size() - 1;
    }

    std::size_t add_reward_channel(std::size_t astro_index) {
        return add_reward_channel_unit(astro_units_.at(astro_index).sg);
    }

    // Any spiking unit may drive a reward channel; astrocyte SGs are the
    // usual source, stim units stand in for tests and replay.
    std::size_t add_reward_channel_unit(std::uint32_t source_unit) {
        require_unit(source_unit, "reward channel source");
        if (units_[source_unit].kind == UnitKind::astro_sic) {
            throw std::invalid_argument("reward channel source cannot be the non-spiking SIC");
        }
        RewardChannel ch;
        ch.source_unit = source_unit;
        channels_.push_back(ch);
        return channels_.size() - 1;
    }

    void tag_reward(std::size_t channel, std::size_t synapse_index) {
        if (synapse_index >= synapses_.size()) {
            throw std::invalid_argument("reward tag references unknown synapse");
        }
        channels_.at(channel).tagged.push_back(synapse_index);
    }

    void set_stim(std::uint32_t unit, bool spike_next_step = true) {
        require_unit(unit, "stim target");
        if (units_[unit].kind != UnitKind::stim) {
            throw std::invalid_argument("set_stim target is not a stim unit");
        }
        units_[unit].stim_now = spike_next_step;
    }

    // Retunes a source in place; its RNG stream is untouched.
    void set_poisson_rate(std::uint32_t unit, double rate_hz) {
        require_unit(unit, "poisson target");
        if (units_[unit].kind != UnitKind::poisson) {
            throw std::invalid_argument("set_poisson_rate target is not a poisson source");
        }
        units_[unit].src.rate_hz = rate_hz;
    }

    // One synchronous step: sources and compartments fire, astrocyte chains
    // advance, spikes are queued on their synapses with the weight they had
    // when emitted, and plasticity then updates traces and weights.
    std::vector<SpikeEvent> step() {
        ensure_ring();
        const std::size_t n = units_.size();
        const std::size_t slot = static_cast<std::size_t>(now_) % pending_.size();
        std::vector<std::int64_t>& delivered = pending_[slot];
        spiked_.assign(n, 0);

        for (std::uint32_t id = 0; id < n; ++id) {
            Unit& u = units_[id];
            switch (u.kind) {
            case UnitKind::neuron:
                spiked_[id] = step_compartment(u.st, u.cfg, clamp_input(delivered[id])) ? 1 : 0;
                break;
            case UnitKind::poisson:
                spiked_[id] = poisson_spike(u.src) ? 1 : 0;
                break;
            case UnitKind::stim:
                spiked_[id] = u.stim_now ? 1 : 0;
                u.stim_now = false;
                break;
            default:
                break; // astrocyte compartments advance below
            }
        }

        for (std::size_t a = 0; a < astrocytes_.size(); ++a) {
            const AstrocyteUnitIds& ids = astro_units_[a];
            const AstrocyteStepResult r = astrocytes_[a].step(clamp_input(delivered[ids.sr]));
            spiked_[ids.sr] = r.sr_spiked ? 1 : 0;
            spiked_[ids.ip3] = r.ip3_spiked ? 1 : 0;
            spiked_[ids.sg] = r.sg_spiked ? 1 : 0;
        }

        std::fill(delivered.begin(), delivered.end(), 0);

        std::vector<SpikeEvent> events;
        for (std::uint32_t id = 0; id < n; ++id) {
            if (spiked_[id]) events.push_back({now_, id});
        }

        // queue deliveries with the pre-update weights
        for (const SpikeEvent& ev : events) {
            for (std::size_t si : outgoing_[ev.unit_id]) {
                const Synapse& s = synapses_[si];
                const std::size_t dst = static_cast<std::size_t>(now_ + s.delay) % pending_.size();
                pending_[dst][s.post] += static_cast<std::int64_t>(s.weight);
            }
        }

        // reward impulses land on tagged synapses the same step the SG fires
        reward_now_.assign(synapses_.size(), 0);
        for (const RewardChannel& ch : channels_) {
            if (spiked_[ch.source_unit]) {
                for (std::size_t si : ch.tagged) reward_now_[si] = 1;
            }
        }

        for (Synapse& s : synapses_) {
            if (s.rule == RuleKind::none) continue;
            const int x0 = spiked_[s.pre];
            const int y0 = spiked_[s.post];
            if (s.rule == RuleKind::bhp) {
                bhp_step(s.bhp, x0, bhp_params);
                s.weight = s.bhp.w;
                continue;
            }
            const std::size_t si = static_cast<std::size_t>(&s - synapses_.data());
            s.traces.x1 = update_trace(s.traces.x1, x0 != 0);
            s.traces.y1 = update_trace(s.traces.y1, y0 != 0);
            s.traces.r1 = update_trace(s.traces.r1, reward_now_[si] != 0);
            const double dw = rule_dw(s.rule, x0, y0, s.traces, plasticity);
            s.weight = std::clamp(s.weight + dw, plasticity.w_min, plasticity.w_max);
        }

        now_ += 1;
        return events;
    }

    long now() const { return now_; }
    std::size_t unit_count() const { return units_.size(); }
    const Unit& unit(std::uint32_t id) const { return units_.at(id); }
    const std::vector<Synapse>& synapses() const { return synapses_; }
    Synapse& synapse(std::size_t i) { return synapses_.at(i); }
    const AstrocyteInstance& astrocyte(std::size_t i) const { return astrocytes_.at(i); }
    AstrocyteInstance& astrocyte(std::size_t i) { return astrocytes_.at(i); }
    const AstrocyteUnitIds& astro_units(std::size_t i) const { return astro_units_.at(i); }
    std::size_t astrocyte_count() const { return astrocytes_.size(); }

    struct NetPlasticityParams : PlasticityParams {
        std::int32_t x_impulse = 16;
        std::int32_t y_impulse = 16;
        std::int32_t r_impulse = 8;
        std::int32_t trace_tau = 2;
    };

    NetPlasticityParams plasticity{};
    BhpParams bhp_params{};

private:
    std::uint32_t push_unit(const Unit& u) {
        units_.push_back(u);
        outgoing_.resize(units_.size());
        return static_cast<std::uint32_t>(units_.size() - 1);
    }

    static Unit make_astro_unit(UnitKind kind, std::size_t astro_index) {
        Unit u;
        u.kind = kind;
        u.astro_index = astro_index;
        return u;
    }

    void require_unit(std::uint32_t id, const char* what) const {
        if (id >= units_.size()) {
            throw std::invalid_argument(std::string(what) + " references unknown unit " +
                                        std::to_string(id));
        }
    }

    void ensure_ring() {
        const std::size_t need = static_cast<std::size_t>(max_delay_) + 1;
        if (pending_.size() < need) {
            pending_.assign(need, std::vector<std::int64_t>(units_.size(), 0));
        }
        for (auto& row : pending_) row.resize(units_.size(), 0);
    }

    static std::int32_t clamp_input(std::int64_t x) { return saturate32(x); }

    Rng master_;
    long now_ = 0;
    std::uint64_t n_sources_ = 0;
    std::int32_t max_delay_ = 1;
    std::vector<Unit> units_;
    std::vector<Synapse> synapses_;
    std::vector<AstrocyteInstance> astrocytes_;
    std::vector<AstrocyteUnitIds> astro_units_;
    std::vector<std::vector<std::size_t>> outgoing_;
    std::vector<RewardChannel> channels_;
    std::vector<std::vector<std::int64_t>> pending_;
    std::vector<std::uint8_t> spiked_;
    std::vector<std::uint8_t> reward_now_;
};

// ---------------------------------------------------------------------------
// Tripartite wiring

// neuron -> SR synapses for every set mask entry.
inline void connect_inputs(Network& net, std::span<const std::uint32_t> neurons,
                           std::span<const std::size_t> astros, const ConnectionMask& mask,
                           std::int32_t delay = 1, RuleKind rule = RuleKind::none) {
    if (mask.n_neurons != neurons.size() || mask.n_astrocytes != astros.size()) {
        throw std::invalid_argument("connect_inputs: mask dimensions do not match");
    }
    for (std::size_t ni = 0; ni < neurons.size(); ++ni) {
        for (std::size_t ai = 0; ai < astros.size(); ++ai) {
            if (mask.is_connected(ni, ai)) {
                net.add_synapse(neurons[ni], net.astro_units(astros[ai]).sr,
                                mask.weight(ni, ai), delay, rule);
            }
        }
    }
}

// SG -> neuron synapses for every set mask entry.
inline void connect_outputs(Network& net, std::span<const std::size_t> astros,
                            std::span<const std::uint32_t> neurons, const ConnectionMask& mask,
                            std::int32_t delay = 1) {
    if (mask.n_neurons != neurons.size() || mask.n_astrocytes != astros.size()) {
        throw std::invalid_argument("connect_outputs: mask dimensions do not match");
    }
    for (std::size_t ni = 0; ni < neurons.size(); ++ni) {
        for (std::size_t ai = 0; ai < astros.size(); ++ai) {
            if (mask.is_connected(ni, ai)) {
                net.add_synapse(net.astro_units(astros[ai]).sg, neurons[ni],
                                mask.weight(ni, ai), delay, RuleKind::none);
            }
        }
    }
}

inline std::size_t create_astrocyte(Network& net, const AstrocytePrototype& proto,
                                    const SicConfigTable& table) {
    return net.add_astrocyte(realize_prototype(proto, table));
}

inline std::vector<std::size_t> create_astrocyte_group(Network& net, const AstrocyteGroup& group,
                                                       const SicConfigTable& table) {
    group.validate();
    std::vector<std::size_t> out;
    out.reserve(group.size);
    for (std::size_t i = 0; i < group.size; ++i) {
        out.push_back(create_astrocyte(net, group.prototypes[group.prototype_map[i]], table));
    }
    return out;
}

} // namespace snan

#endif
