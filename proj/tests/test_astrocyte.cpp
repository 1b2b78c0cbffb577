#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "doctest.h"
#include "snan/network.hpp"

using namespace snan;

TEST_CASE("astrocyte stays silent without input") {
    AstrocyteInstance astro;
    for (int t = 0; t < 20000; ++t) {
        const auto r = astro.step(0);
        CHECK_FALSE(r.ip3_spiked);
        CHECK_FALSE(r.sg_spiked);
    }
}

TEST_CASE("sic envelope is non-increasing between ip3 events") {
    AstrocyteInstance astro;
    astro.cfg.ip3_to_sic_weight = 512;
    astro.cfg.sic_decay = 128;
    // inject one IP3 impulse by stepping the SIC compartment directly
    const auto sic_cfg = astro.cfg.sic_compartment();
    step_compartment(astro.sic, sic_cfg, astro.cfg.ip3_to_sic_weight);
    std::int32_t prev = astro.sic.voltage;
    CHECK(prev == 512);
    while (astro.sic.voltage > 0) {
        step_compartment(astro.sic, sic_cfg, 0);
        CHECK(astro.sic.voltage <= prev);
        prev = astro.sic.voltage;
    }
}

TEST_CASE("ip3 interval shrinks with presynaptic rate") {
    // deterministic drive at decreasing periods; IP3 inter-spike interval
    // must be non-increasing in the input rate
    std::vector<long> intervals;
    for (int period : {8, 4, 2, 1}) {
        AstrocyteInstance astro;
        astro.cfg.sr = CompartmentConfig{4096, 0, 64, 0, 0, true};
        astro.cfg.ip3 = CompartmentConfig{4096, 0, 400, 0, 0, true};
        astro.cfg.ip3_sensitivity = 8;
        std::vector<long> spikes;
        for (long t = 0; t < 30000 && spikes.size() < 3; ++t) {
            const auto r = astro.step(t % period == 0 ? 32 : 0);
            if (r.ip3_spiked) spikes.push_back(t);
        }
        REQUIRE(spikes.size() >= 3);
        intervals.push_back(spikes[2] - spikes[1]);
    }
    for (std::size_t i = 1; i < intervals.size(); ++i) CHECK(intervals[i] <= intervals[i - 1]);
}

TEST_CASE("burst window grows with the sic impulse weight") {
    double prev_window = -1.0;
    for (std::int32_t w : {64, 128, 256, 512, 1024}) {
        const auto m = measure_sic_response(w, 128, 64);
        REQUIRE(m.has_value());
        CHECK(m->window_ms >= prev_window);
        prev_window = m->window_ms;
    }
}

TEST_CASE("vanishing envelope with high threshold yields no table row") {
    CHECK_FALSE(measure_sic_response(8, 4096, 16).has_value());
    const auto table = build_sic_table({8}, {4096}, {16, 32, 64});
    CHECK(table.rows.empty());
}

TEST_CASE("single-spike burst gets window zero and the rate ceiling") {
    // decay 4096 kills the envelope after one step; threshold <= impulse
    // yields exactly one spike
    const auto m = measure_sic_response(32, 4096, 16);
    REQUIRE(m.has_value());
    CHECK(m->spike_count == 1);
    CHECK(m->window_ms == 0.0);
    CHECK(m->amplitude_hz == 1000.0);
}

TEST_CASE("table rows re-simulate to their stored measurements") {
    const auto table = build_sic_table({16, 64, 256, 1024}, {64, 256, 1024}, {16, 64, 256});
    REQUIRE_FALSE(table.rows.empty());
    for (const auto& row : table.rows) {
        const auto m = measure_sic_response(row.ip3_to_sic_weight, row.sic_current_decay,
                                            row.sg_threshold);
        REQUIRE(m.has_value());
        CHECK(m->amplitude_hz == row.measured_amplitude_hz);
        CHECK(m->window_ms == row.measured_window_ms);
    }
}

TEST_CASE("table is identical for any worker count") {
    const auto t1 = build_sic_table({16, 64, 256}, {128, 512}, {16, 64}, 1);
    const auto t2 = build_sic_table({16, 64, 256}, {128, 512}, {16, 64}, 4);
    REQUIRE(t1.rows.size() == t2.rows.size());
    for (std::size_t i = 0; i < t1.rows.size(); ++i) {
        CHECK(t1.rows[i].triple() == t2.rows[i].triple());
        CHECK(t1.rows[i].measured_amplitude_hz == t2.rows[i].measured_amplitude_hz);
        CHECK(t1.rows[i].measured_window_ms == t2.rows[i].measured_window_ms);
    }
}

TEST_CASE("table has no duplicate parameter triples") {
    const auto table = build_sic_table(default_sic_weight_range(), default_sic_decay_range(),
                                       default_sic_threshold_range());
    std::set<std::tuple<std::int32_t, std::int32_t, std::int32_t>> seen;
    for (const auto& row : table.rows) CHECK(seen.insert(row.triple()).second);

    // repeating a range value must not create duplicate rows either
    const auto repeated = build_sic_table({64, 64, 16}, {128, 128}, {16, 64});
    const auto plain = build_sic_table({16, 64}, {128}, {16, 64});
    REQUIRE(repeated.rows.size() == plain.rows.size());
    for (std::size_t i = 0; i < plain.rows.size(); ++i) {
        CHECK(repeated.rows[i].triple() == plain.rows[i].triple());
    }
}

TEST_CASE("lookup returns an exact row at zero cost") {
    const auto table = build_sic_table({16, 64, 256}, {128, 512}, {16, 64});
    REQUIRE_FALSE(table.rows.empty());
    const auto& probe = table.rows[table.rows.size() / 2];
    const auto& hit = lookup_sic_config(table, probe.measured_amplitude_hz, probe.measured_window_ms);
    CHECK(hit.measured_amplitude_hz == probe.measured_amplitude_hz);
    CHECK(hit.measured_window_ms == probe.measured_window_ms);
}

TEST_CASE("lookup tie-break picks the smaller parameter triple") {
    SicConfigTable table;
    table.rows.push_back({4, 128, 32, 100.0, 10.0});
    table.rows.push_back({2, 128, 32, 120.0, 10.0});
    const auto& hit = lookup_sic_config(table, 110.0, 10.0); // equidistant
    CHECK(hit.ip3_to_sic_weight == 2);
}

TEST_CASE("lookup equals exhaustive argmin on random targets") {
    const auto table = build_sic_table(default_sic_weight_range(), default_sic_decay_range(),
                                       default_sic_threshold_range());
    REQUIRE_FALSE(table.rows.empty());
    Rng rng(314);
    for (int i = 0; i < 200; ++i) {
        const double ta = rng.next_double() * 1200.0;
        const double tw = rng.next_double() * 800.0;
        const SicConfigRow* best = nullptr;
        double best_cost = 0.0;
        for (const auto& row : table.rows) {
            const double cost = (ta - row.measured_amplitude_hz) * (ta - row.measured_amplitude_hz) +
                                (tw - row.measured_window_ms) * (tw - row.measured_window_ms);
            if (!best || cost < best_cost || (cost == best_cost && row.triple() < best->triple())) {
                best = &row;
                best_cost = cost;
            }
        }
        const auto& hit = lookup_sic_config(table, ta, tw);
        CHECK(hit.triple() == best->triple());
    }
}

TEST_CASE("lookup on an empty table fails") {
    SicConfigTable empty;
    CHECK_THROWS(lookup_sic_config(empty, 100.0, 100.0));
}

TEST_CASE("default prototype realizes against the default table") {
    const auto table = build_sic_table(default_sic_weight_range(), default_sic_decay_range(),
                                       default_sic_threshold_range());
    const AstrocytePrototype proto{};
    const auto cfg = realize_prototype(proto, table);
    const auto& row = lookup_sic_config(table, proto.sic_amplitude, proto.sic_window);
    CHECK(cfg.ip3_to_sic_weight == row.ip3_to_sic_weight);
    CHECK(cfg.sic_decay == row.sic_current_decay);
    CHECK(cfg.sg_threshold == row.sg_threshold);
    CHECK(cfg.ip3_sensitivity == proto.ip3_sensitivity);
}

TEST_CASE("low-level overrides win over table-derived values") {
    const auto table = build_sic_table({16, 64}, {128}, {16, 64});
    AstrocytePrototype proto;
    proto.low_level.sg_threshold = 999;
    proto.low_level.ip3_threshold = 1234;
    const auto cfg = realize_prototype(proto, table);
    CHECK(cfg.sg_threshold == 999);
    CHECK(cfg.ip3.threshold == 1234);
}

TEST_CASE("calibrated config reproduces its table row in closed loop") {
    const auto table = build_sic_table(default_sic_weight_range(), default_sic_decay_range(),
                                       default_sic_threshold_range());
    Rng rng(2718);
    for (int i = 0; i < 20; ++i) {
        const auto& probe = table.rows[rng.next_below(table.rows.size())];
        if (probe.measured_window_ms > 0.0 && probe.measured_window_ms < 8.0) continue;
        AstrocytePrototype proto;
        proto.sic_amplitude = probe.measured_amplitude_hz;
        proto.sic_window = std::max(probe.measured_window_ms, 8.0); // keep prototype invariant valid
        if (proto.sic_amplitude * proto.sic_window < 1000.0) continue;
        const auto cfg = realize_prototype(proto, table);
        const auto m = measure_sic_response(cfg.ip3_to_sic_weight, cfg.sic_decay, cfg.sg_threshold);
        REQUIRE(m.has_value());
        CHECK(std::abs(m->amplitude_hz - proto.sic_amplitude) <= 0.1 * proto.sic_amplitude);
        if (probe.measured_window_ms > 0.0) {
            CHECK(std::abs(m->window_ms - proto.sic_window) <= 0.1 * proto.sic_window);
        }
    }
}

TEST_CASE("two instances from one prototype are independent but identical") {
    const auto table = build_sic_table(default_sic_weight_range(), default_sic_decay_range(),
                                       default_sic_threshold_range());
    const AstrocytePrototype proto{};
    const auto cfg = realize_prototype(proto, table);
    AstrocyteInstance a{cfg};
    AstrocyteInstance b{cfg};
    for (int t = 0; t < 2000; ++t) a.step(64);
    CHECK(b.ip3.voltage == 0); // untouched by stepping a
    for (int t = 0; t < 2000; ++t) b.step(64);
    CHECK(a.ip3.voltage == b.ip3.voltage);
    CHECK(a.sic.voltage == b.sic.voltage);
}

TEST_CASE("group instantiation yields identical responses per prototype") {
    const auto table = build_sic_table(default_sic_weight_range(), default_sic_decay_range(),
                                       default_sic_threshold_range());
    Network net(55);
    AstrocyteGroup group;
    group.prototypes.push_back(AstrocytePrototype{});
    group.size = 3;
    group.prototype_map = {0, 0, 0};
    const auto astros = create_astrocyte_group(net, group, table);
    REQUIRE(astros.size() == 3);

    std::vector<std::uint32_t> stims;
    for (std::size_t i = 0; i < 3; ++i) {
        const auto s = net.add_stim();
        stims.push_back(s);
        net.add_synapse(s, net.astro_units(astros[i]).sr, 64.0, 1);
    }
    std::vector<std::vector<long>> sg_spikes(3);
    for (long t = 0; t < 20000; ++t) {
        if (t % 3 == 0) {
            for (auto s : stims) net.set_stim(s);
        }
        for (const auto& ev : net.step()) {
            for (std::size_t i = 0; i < 3; ++i) {
                if (ev.unit_id == net.astro_units(astros[i]).sg) sg_spikes[i].push_back(ev.step);
            }
        }
    }
    CHECK(sg_spikes[0] == sg_spikes[1]);
    CHECK(sg_spikes[1] == sg_spikes[2]);
    CHECK_FALSE(sg_spikes[0].empty());
}

TEST_CASE("group validation catches bad maps") {
    AstrocyteGroup group;
    group.prototypes.push_back(AstrocytePrototype{});
    group.size = 2;
    group.prototype_map = {0};
    CHECK_THROWS(group.validate());
    group.prototype_map = {0, 7};
    CHECK_THROWS(group.validate());
}

TEST_CASE("all-false mask creates no synapses") {
    const auto table = build_sic_table({64}, {128}, {16});
    Network net(1);
    std::vector<std::uint32_t> neurons;
    for (int i = 0; i < 4; ++i) neurons.push_back(net.add_neuron(CompartmentConfig{}));
    std::vector<std::size_t> astros{create_astrocyte(net, AstrocytePrototype{1, 1000.0, 8.0, {}}, table)};
    ConnectionMask mask(4, 1);
    const auto before = net.synapses().size();
    connect_inputs(net, neurons, astros, mask);
    connect_outputs(net, astros, neurons, mask);
    CHECK(net.synapses().size() == before);
}

TEST_CASE("disjoint masks wire disjoint tripartite synapses") {
    const auto table = build_sic_table({64}, {128}, {16});
    Network net(2);
    std::vector<std::uint32_t> neurons;
    for (int i = 0; i < 20; ++i) neurons.push_back(net.add_neuron(CompartmentConfig{}));
    std::vector<std::size_t> astros;
    astros.push_back(create_astrocyte(net, AstrocytePrototype{1, 1000.0, 8.0, {}}, table));
    astros.push_back(create_astrocyte(net, AstrocytePrototype{1, 1000.0, 8.0, {}}, table));
    ConnectionMask mask(20, 2);
    for (int i = 0; i < 10; ++i) mask.set(i, 0, 4);
    for (int i = 10; i < 20; ++i) mask.set(i, 1, 4);
    connect_inputs(net, neurons, astros, mask);

    int to_a0 = 0, to_a1 = 0;
    for (const auto& s : net.synapses()) {
        if (s.post == net.astro_units(astros[0]).sr) ++to_a0;
        if (s.post == net.astro_units(astros[1]).sr) ++to_a1;
    }
    CHECK(to_a0 == 10);
    CHECK(to_a1 == 10);
}

TEST_CASE("mask dimension mismatch is rejected") {
    const auto table = build_sic_table({64}, {128}, {16});
    Network net(3);
    std::vector<std::uint32_t> neurons{net.add_neuron(CompartmentConfig{})};
    std::vector<std::size_t> astros{create_astrocyte(net, AstrocytePrototype{1, 1000.0, 8.0, {}}, table)};
    ConnectionMask mask(2, 1);
    CHECK_THROWS(connect_inputs(net, neurons, astros, mask));
}

TEST_CASE("burst output reaches only masked postsynaptic neurons") {
    const auto table = build_sic_table(default_sic_weight_range(), default_sic_decay_range(),
                                       default_sic_threshold_range());
    Network net(4);
    const auto drive = net.add_poisson(800.0);
    CompartmentConfig out_cfg{4096, 4096, 50, 0, 0, true};
    std::vector<std::uint32_t> neurons;
    for (int i = 0; i < 6; ++i) neurons.push_back(net.add_neuron(out_cfg));

    AstrocytePrototype proto;
    proto.low_level.ip3_threshold = 500; // fire quickly under strong drive
    std::vector<std::size_t> astros{create_astrocyte(net, proto, table)};
    net.add_synapse(drive, net.astro_units(astros[0]).sr, 64.0, 1);

    ConnectionMask out_mask(6, 1);
    for (int i = 0; i < 3; ++i) out_mask.set(i, 0, 100);
    connect_outputs(net, astros, neurons, out_mask);

    std::vector<long> counts(6, 0);
    for (long t = 0; t < 20000; ++t) {
        for (const auto& ev : net.step()) {
            for (std::size_t i = 0; i < 6; ++i) {
                if (ev.unit_id == neurons[i]) ++counts[i];
            }
        }
    }
    for (int i = 0; i < 3; ++i) CHECK(counts[i] > 0);
    for (int i = 3; i < 6; ++i) CHECK(counts[i] == 0);
}
