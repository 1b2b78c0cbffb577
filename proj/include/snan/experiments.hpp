#ifndef SNAN_EXPERIMENTS_HPP
#define SNAN_EXPERIMENTS_HPP

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "snan/chaos.hpp"
#include "snan/io.hpp"
#include "snan/ising.hpp"
#include "snan/network.hpp"

namespace snan {

inline constexpr const char* kVersion = "0.1.0";

struct RunOptions {
    std::uint64_t seed = 1;
    std::filesystem::path out_dir;
    bool ablate_astrocyte = false;
    std::string replay_path;   // chaos: drive spikes csv
    std::string record_drive;  // chaos: write the drive stream here
    unsigned table_threads = 0;
};

struct ExperimentResult {
    nlohmann::json summary;
    std::vector<SpikeEvent> spikes;
    std::vector<WeightSnapshot> weights;
    std::vector<std::vector<double>> weight_series;
    std::vector<std::string> bar_labels;
    std::vector<double> bar_values;
    long n_steps = 0;
    std::uint32_t n_units = 0;
    std::string title;
    std::vector<std::pair<std::string, std::string>> extra_files; // name -> content
};

inline unsigned table_threads_from_env(unsigned requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("SNAN_THREADS")) {
        const long v = std::atol(env);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return 0; // auto
}

inline nlohmann::json provenance(const ConfigFile& cfg, std::uint64_t seed) {
    std::ostringstream hex;
    hex << std::hex << cfg.hash();
    return nlohmann::json{{"config_hash", hex.str()}, {"seed", seed}, {"version", kVersion}};
}

// ---------------------------------------------------------------------------
// config helpers

inline AstrocytePrototype prototype_from_config(const ConfigFile& cfg, const std::string& section) {
    AstrocytePrototype proto;
    proto.ip3_sensitivity = static_cast<std::int32_t>(cfg.get_int(section, "ip3_sensitivity", 8));
    proto.sic_amplitude = cfg.get_num(section, "sic_amplitude_hz", proto.sic_amplitude);
    proto.sic_window = cfg.get_num(section, "sic_window_ms", proto.sic_window);
    auto maybe = [&](const char* key) -> std::optional<std::int32_t> {
        if (cfg.has(section, key)) return static_cast<std::int32_t>(cfg.get_int(section, key));
        return std::nullopt;
    };
    proto.low_level.sr_threshold = maybe("sr_threshold");
    proto.low_level.sr_current_decay = maybe("sr_current_decay");
    proto.low_level.sr_voltage_decay = maybe("sr_voltage_decay");
    proto.low_level.sr_refractory_steps = maybe("sr_refractory_steps");
    proto.low_level.ip3_threshold = maybe("ip3_threshold");
    proto.low_level.ip3_voltage_decay = maybe("ip3_voltage_decay");
    proto.low_level.ip3_to_sic_weight = maybe("ip3_to_sic_weight");
    proto.low_level.sic_decay = maybe("sic_decay");
    proto.low_level.sg_threshold = maybe("sg_threshold");
    return proto;
}

// Simulated time per step; every experiment duration, rate, and reported
// time scales through this.
inline double dt_ms_of(const ConfigFile& cfg) {
    const double dt = cfg.get_num("run", "dt_ms", 1.0);
    if (dt <= 0.0) throw std::runtime_error("run.dt_ms must be positive");
    return dt;
}

inline long steps_of_seconds(double seconds, double dt_ms) {
    return std::lround(seconds * 1000.0 / dt_ms);
}

inline long steps_of_ms(double ms, double dt_ms) {
    return std::max<long>(1, std::lround(ms / dt_ms));
}

inline SicConfigTable table_from_config(const ConfigFile& cfg, const std::string& section,
                                        unsigned threads) {
    const auto weights = cfg.has(section, "table_weights") ? cfg.get_i32_list(section, "table_weights")
                                                           : default_sic_weight_range();
    const auto decays = cfg.has(section, "table_decays") ? cfg.get_i32_list(section, "table_decays")
                                                         : default_sic_decay_range();
    const auto thresholds = cfg.has(section, "table_thresholds")
                                ? cfg.get_i32_list(section, "table_thresholds")
                                : default_sic_threshold_range();
    return build_sic_table(weights, decays, thresholds, table_threads_from_env(threads),
                           dt_ms_of(cfg));
}

inline void load_plasticity(const ConfigFile& cfg, Network& net) {
    net.plasticity.stdp.a = cfg.get_num("plasticity", "a", net.plasticity.stdp.a);
    net.plasticity.stdp.b = cfg.get_num("plasticity", "b", net.plasticity.stdp.b);
    net.plasticity.hsd.c = cfg.get_num("plasticity", "c", net.plasticity.hsd.c);
    net.plasticity.hsd.d = cfg.get_num("plasticity", "d", net.plasticity.hsd.d);
    net.plasticity.w_min = cfg.get_num("plasticity", "w_min", net.plasticity.w_min);
    net.plasticity.w_max = cfg.get_num("plasticity", "w_max", net.plasticity.w_max);
    net.plasticity.x_impulse =
        static_cast<std::int32_t>(cfg.get_int("plasticity", "x_impulse", net.plasticity.x_impulse));
    net.plasticity.y_impulse =
        static_cast<std::int32_t>(cfg.get_int("plasticity", "y_impulse", net.plasticity.y_impulse));
    net.plasticity.r_impulse =
        static_cast<std::int32_t>(cfg.get_int("plasticity", "r_impulse", net.plasticity.r_impulse));
    net.plasticity.trace_tau =
        static_cast<std::int32_t>(cfg.get_int("plasticity", "trace_tau", net.plasticity.trace_tau));
}

inline void load_bhp(const ConfigFile& cfg, Network& net) {
    net.bhp_params.a = cfg.get_num("bhp", "a", net.bhp_params.a);
    net.bhp_params.b = cfg.get_num("bhp", "b", net.bhp_params.b);
    net.bhp_params.c = cfg.get_num("bhp", "c", net.bhp_params.c);
    net.bhp_params.w_max = cfg.get_num("bhp", "w_max", net.bhp_params.w_max);
    net.bhp_params.k = static_cast<int>(cfg.get_int("bhp", "k", net.bhp_params.k));
    net.bhp_params.t_max = cfg.get_num("bhp", "t_max", net.bhp_params.t_max);
    net.bhp_params.validate();
}

inline CompartmentConfig neuron_from_config(const ConfigFile& cfg, const std::string& section,
                                            const std::string& prefix,
                                            const CompartmentConfig& fallback) {
    CompartmentConfig out = fallback;
    out.threshold =
        static_cast<std::int32_t>(cfg.get_int(section, prefix + "_threshold", fallback.threshold));
    out.current_decay = static_cast<std::int32_t>(
        cfg.get_int(section, prefix + "_current_decay", fallback.current_decay));
    out.voltage_decay = static_cast<std::int32_t>(
        cfg.get_int(section, prefix + "_voltage_decay", fallback.voltage_decay));
    out.refractory_steps = static_cast<std::int32_t>(
        cfg.get_int(section, prefix + "_refractory_steps", fallback.refractory_steps));
    out.bias = static_cast<std::int32_t>(cfg.get_int(section, prefix + "_bias", fallback.bias));
    return out;
}

// ---------------------------------------------------------------------------
// shared metrics

struct Burst {
    long first = -1;
    long last = -1;
    int count = 0;
    double window_ms(double dt_ms = 1.0) const {
        return count > 1 ? static_cast<double>(last - first) * dt_ms : 0.0;
    }
};

// First group of spikes separated from the next by more than max_gap steps.
inline Burst first_burst(const std::vector<long>& spike_steps, long max_gap) {
    Burst b;
    for (long t : spike_steps) {
        if (b.first < 0) {
            b.first = b.last = t;
            b.count = 1;
        } else if (t - b.last <= max_gap) {
            b.last = t;
            b.count += 1;
        } else {
            break;
        }
    }
    return b;
}

// Pearson correlation of binned spike counts, averaged over unit pairs.
inline double mean_pairwise_correlation(const std::vector<std::vector<double>>& binned,
                                        const std::vector<std::size_t>& group_a,
                                        const std::vector<std::size_t>& group_b) {
    auto pearson = [](const std::vector<double>& x, const std::vector<double>& y) {
        const double n = static_cast<double>(x.size());
        double mx = 0.0, my = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            mx += x[i];
            my += y[i];
        }
        mx /= n;
        my /= n;
        double cov = 0.0, vx = 0.0, vy = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            cov += (x[i] - mx) * (y[i] - my);
            vx += (x[i] - mx) * (x[i] - mx);
            vy += (y[i] - my) * (y[i] - my);
        }
        if (vx == 0.0 || vy == 0.0) return 0.0;
        return cov / std::sqrt(vx * vy);
    };
    double sum = 0.0;
    long pairs = 0;
    const bool same = &group_a == &group_b;
    for (std::size_t i = 0; i < group_a.size(); ++i) {
        for (std::size_t j = same ? i + 1 : 0; j < group_b.size(); ++j) {
            if (group_a[i] == group_b[j]) continue;
            sum += pearson(binned[group_a[i]], binned[group_b[j]]);
            pairs += 1;
        }
    }
    return pairs > 0 ? sum / static_cast<double>(pairs) : 0.0;
}

// ---------------------------------------------------------------------------
// sync: one astrocyte senses a Poisson population and synchronizes the
// postsynaptic layer with its SIC-driven burst

inline ExperimentResult run_sync(const ConfigFile& cfg, const RunOptions& opt) {
    const double dt = dt_ms_of(cfg);
    const long n_pre = cfg.get_int("sync", "n_pre", 100);
    const long n_post = cfg.get_int("sync", "n_post", 100);
    const double pre_rate = cfg.get_num("sync", "pre_rate_hz", 20.0);
    const double p_conn = cfg.get_num("sync", "connect_prob", 0.10);
    const double w_ff = cfg.get_num("sync", "feedforward_weight", 2.0);
    const double w_in = cfg.get_num("sync", "input_weight", 2.0);
    const double w_sic = cfg.get_num("sync", "sic_output_weight", 24.0);
    const long duration = steps_of_seconds(cfg.get_num("sync", "duration_s", 8.0), dt);
    const long burst_gap = steps_of_ms(cfg.get_num("sync", "burst_gap_ms", 50.0), dt);

    Network net(opt.seed);
    std::vector<std::uint32_t> pre, post;
    for (long i = 0; i < n_pre; ++i) pre.push_back(net.add_poisson(pre_rate, dt));
    const CompartmentConfig post_cfg =
        neuron_from_config(cfg, "sync", "post", CompartmentConfig{4096, 512, 48, 0, 0, true});
    for (long i = 0; i < n_post; ++i) post.push_back(net.add_neuron(post_cfg));

    Rng wiring = Rng(opt.seed).fork(0xF00D);
    for (auto a : pre)
        for (auto b : post)
            if (wiring.next_double() < p_conn) net.add_synapse(a, b, w_ff, 1);

    const auto table = table_from_config(cfg, "astrocyte", opt.table_threads);
    const auto proto = prototype_from_config(cfg, "astrocyte");
    const auto astro = create_astrocyte(net, proto, table);
    for (auto a : pre) net.add_synapse(a, net.astro_units(astro).sr, w_in, 1);
    if (!opt.ablate_astrocyte) {
        for (auto b : post) net.add_synapse(net.astro_units(astro).sg, b, w_sic, 1);
    }

    const auto ids = net.astro_units(astro);
    std::vector<SpikeEvent> events;
    std::vector<long> ip3_steps, sg_steps;
    for (long t = 0; t < duration; ++t) {
        for (const auto& ev : net.step()) {
            events.push_back(ev);
            if (ev.unit_id == ids.ip3) ip3_steps.push_back(ev.step);
            if (ev.unit_id == ids.sg) sg_steps.push_back(ev.step);
        }
    }

    const Burst burst = first_burst(sg_steps, burst_gap);
    const double first_ip3_s =
        ip3_steps.empty() ? -1.0 : static_cast<double>(ip3_steps[0]) * dt / 1000.0;
    long burst_lo = burst.first, burst_hi = burst.last;
    if (burst.first < 0) { // ablation fallback: nominal window from config
        burst_lo = steps_of_seconds(cfg.get_num("sync", "nominal_burst_start_s", 6.0), dt);
        burst_hi = burst_lo + steps_of_ms(cfg.get_num("sync", "nominal_burst_ms", 400.0), dt);
    }

    // fraction of postsynaptic units firing inside a window
    auto fraction_firing = [&](long lo, long hi) {
        std::set<std::uint32_t> active;
        for (const auto& ev : events) {
            if (ev.step >= lo && ev.step <= hi && ev.unit_id >= post.front() &&
                ev.unit_id <= post.back()) {
                active.insert(ev.unit_id);
            }
        }
        return static_cast<double>(active.size()) / static_cast<double>(n_post);
    };
    const double burst_fraction = fraction_firing(burst_lo, burst_hi);
    const long window_len = burst_hi - burst_lo;
    Rng baseline_rng = Rng(opt.seed).fork(0xBA5E);
    double baseline_sum = 0.0;
    int baseline_n = 0;
    for (int k = 0; k < 200; ++k) {
        const long lo = static_cast<long>(baseline_rng.next_below(
            static_cast<std::uint64_t>(std::max<long>(1, duration - window_len))));
        if (lo + window_len >= burst_lo - window_len && lo <= burst_hi + window_len) continue;
        baseline_sum += fraction_firing(lo, lo + window_len);
        baseline_n += 1;
    }
    const double baseline_fraction = baseline_n > 0 ? baseline_sum / baseline_n : 0.0;
    const double eps = 0.5 / static_cast<double>(n_post);
    const double synchrony = (burst_fraction + eps) / (baseline_fraction + eps);

    ExperimentResult res;
    res.title = "sync: spike raster";
    res.spikes = events;
    res.n_steps = duration;
    res.n_units = static_cast<std::uint32_t>(net.unit_count());
    res.bar_labels = {"burst", "baseline"};
    res.bar_values = {burst_fraction, baseline_fraction};
    res.summary = {
        {"experiment", "sync"},
        {"provenance", provenance(cfg, opt.seed)},
        {"ablated", opt.ablate_astrocyte},
        {"first_ip3_s", first_ip3_s},
        {"ip3_spike_count", ip3_steps.size()},
        {"sg_spike_count", sg_steps.size()},
        {"burst_window_ms", burst.window_ms(dt)},
        {"burst_fraction", burst_fraction},
        {"baseline_fraction", baseline_fraction},
        {"synchrony_index", synchrony},
    };
    return res;
}

// ---------------------------------------------------------------------------
// group-sync: two astrocytes with disjoint masks impose two synchrony groups

inline ExperimentResult run_group_sync(const ConfigFile& cfg, const RunOptions& opt) {
    const double dt = dt_ms_of(cfg);
    const long n_in = cfg.get_int("group_sync", "n_inputs", 20);
    const long n_out = cfg.get_int("group_sync", "n_outputs", 20);
    const double in_rate = cfg.get_num("group_sync", "input_rate_hz", 60.0);
    const double p_conn = cfg.get_num("group_sync", "connect_prob", 0.08);
    const double w_ff = cfg.get_num("group_sync", "weight", 3.0);
    const double w_in = cfg.get_num("group_sync", "input_weight", 16.0);
    const double w_sic = cfg.get_num("group_sync", "sic_output_weight", 24.0);
    const long duration = steps_of_seconds(cfg.get_num("group_sync", "duration_s", 24.0), dt);
    const long bin_steps = steps_of_ms(cfg.get_num("group_sync", "coincidence_bin_ms", 20.0), dt);
    const long n_astro = cfg.get_int("group_sync", "n_astrocytes", 2);
    if (n_astro != 1 && n_astro != 2) {
        throw std::runtime_error("group_sync.n_astrocytes must be 1 or 2");
    }

    Network net(opt.seed);
    std::vector<std::uint32_t> inputs, outputs;
    for (long i = 0; i < n_in; ++i) inputs.push_back(net.add_poisson(in_rate, dt));
    const CompartmentConfig out_cfg =
        neuron_from_config(cfg, "group_sync", "out", CompartmentConfig{4096, 512, 48, 0, 0, true});
    for (long i = 0; i < n_out; ++i) outputs.push_back(net.add_neuron(out_cfg));

    Rng wiring = Rng(opt.seed).fork(0xF00D);
    for (auto a : inputs)
        for (auto b : outputs)
            if (wiring.next_double() < p_conn) net.add_synapse(a, b, w_ff, 1);

    const auto table = table_from_config(cfg, "astrocyte_a", opt.table_threads);
    AstrocyteGroup group;
    group.prototypes.push_back(prototype_from_config(cfg, "astrocyte_a"));
    if (n_astro == 2) group.prototypes.push_back(prototype_from_config(cfg, "astrocyte_b"));
    group.size = static_cast<std::size_t>(n_astro);
    for (long i = 0; i < n_astro; ++i) group.prototype_map.push_back(static_cast<std::size_t>(i));
    const auto astros = create_astrocyte_group(net, group, table);

    // disjoint halves for two astrocytes, everything for one
    ConnectionMask in_mask(static_cast<std::size_t>(n_in), astros.size());
    ConnectionMask out_mask(static_cast<std::size_t>(n_out), astros.size());
    for (long i = 0; i < n_in; ++i) {
        const std::size_t which = n_astro == 1 ? 0 : (i < n_in / 2 ? 0 : 1);
        in_mask.set(static_cast<std::size_t>(i), which, static_cast<std::int32_t>(w_in));
    }
    for (long i = 0; i < n_out; ++i) {
        const std::size_t which = n_astro == 1 ? 0 : (i < n_out / 2 ? 0 : 1);
        out_mask.set(static_cast<std::size_t>(i), which, static_cast<std::int32_t>(w_sic));
    }
    connect_inputs(net, inputs, astros, in_mask);
    if (!opt.ablate_astrocyte) connect_outputs(net, astros, outputs, out_mask);

    const long n_bins = (duration + bin_steps - 1) / bin_steps;
    std::vector<std::vector<double>> binned(static_cast<std::size_t>(n_out),
                                            std::vector<double>(static_cast<std::size_t>(n_bins), 0.0));
    std::vector<SpikeEvent> events;
    std::vector<long> sg_counts(astros.size(), 0), ip3_counts(astros.size(), 0);
    for (long t = 0; t < duration; ++t) {
        for (const auto& ev : net.step()) {
            events.push_back(ev);
            if (ev.unit_id >= outputs.front() && ev.unit_id <= outputs.back()) {
                binned[ev.unit_id - outputs.front()][static_cast<std::size_t>(t / bin_steps)] += 1.0;
            }
            for (std::size_t a = 0; a < astros.size(); ++a) {
                if (ev.unit_id == net.astro_units(astros[a]).sg) sg_counts[a] += 1;
                if (ev.unit_id == net.astro_units(astros[a]).ip3) ip3_counts[a] += 1;
            }
        }
    }

    std::vector<std::size_t> group_a, group_b;
    for (long i = 0; i < n_out; ++i) {
        (n_astro == 1 || i < n_out / 2 ? group_a : group_b).push_back(static_cast<std::size_t>(i));
    }
    if (n_astro == 1) {
        // degenerate split for reporting: first half vs second half
        group_b.assign(group_a.begin() + group_a.size() / 2, group_a.end());
        group_a.resize(group_a.size() - group_b.size());
    }
    const double within_a = mean_pairwise_correlation(binned, group_a, group_a);
    const double within_b = mean_pairwise_correlation(binned, group_b, group_b);
    const double across = mean_pairwise_correlation(binned, group_a, group_b);

    ExperimentResult res;
    res.title = "group-sync: spike raster";
    res.spikes = events;
    res.n_steps = duration;
    res.n_units = static_cast<std::uint32_t>(net.unit_count());
    res.bar_labels = {"within_a", "within_b", "across"};
    res.bar_values = {within_a, within_b, across};
    res.summary = {
        {"experiment", "group-sync"},
        {"provenance", provenance(cfg, opt.seed)},
        {"ablated", opt.ablate_astrocyte},
        {"n_astrocytes", n_astro},
        {"within_group_a", within_a},
        {"within_group_b", within_b},
        {"across_groups", across},
        {"within_exceeds_across_a", within_a > across},
        {"within_exceeds_across_b", within_b > across},
        {"ip3_spike_counts", ip3_counts},
        {"sg_spike_counts", sg_counts},
    };
    return res;
}

// ---------------------------------------------------------------------------
// memory: single-shot pattern memorization with astrocyte-gated plasticity

struct PatternSet {
    std::vector<std::vector<int>> patterns;
    double baseline_rate_hz = 5.0;
    double active_rate_hz = 100.0;

    void validate(int n_sensory) const {
        if (patterns.size() != 5) throw std::runtime_error("pattern set: need exactly 5 patterns");
        for (const auto& p : patterns) {
            if (p.size() != 3) throw std::runtime_error("pattern set: each pattern has 3 active blocks");
            std::set<int> uniq(p.begin(), p.end());
            if (uniq.size() != 3) throw std::runtime_error("pattern set: duplicate block in pattern");
            for (int b : p) {
                if (b < 0 || b >= n_sensory) throw std::runtime_error("pattern set: block out of range");
            }
        }
        for (std::size_t i = 0; i < patterns.size(); ++i) {
            for (std::size_t j = i + 1; j < patterns.size(); ++j) {
                int overlap = 0;
                for (int a : patterns[i])
                    for (int b : patterns[j])
                        if (a == b) ++overlap;
                if (overlap != 1) {
                    throw std::runtime_error("pattern set: pairwise overlap must be exactly 1");
                }
            }
        }
    }
};

inline PatternSet patterns_from_config(const ConfigFile& cfg, int n_sensory) {
    PatternSet set;
    set.baseline_rate_hz = cfg.get_num("memory", "baseline_rate_hz", 5.0);
    set.active_rate_hz = cfg.get_num("memory", "active_rate_hz", 100.0);
    const std::string text =
        cfg.get_str("memory", "patterns", "4,0,1;4,2,3;0,2,5;4,5,6;1,3,5");
    for (const auto& chunk : ConfigFile::split(text, ';')) {
        std::vector<int> p;
        for (const auto& tok : ConfigFile::split(chunk, ',')) p.push_back(std::stoi(tok));
        set.patterns.push_back(p);
    }
    set.validate(n_sensory);
    return set;
}

inline ExperimentResult run_memory(const ConfigFile& cfg, const RunOptions& opt) {
    const double dt = dt_ms_of(cfg);
    const int n_sensory = static_cast<int>(cfg.get_int("memory", "n_sensory", 9));
    const long train_steps = steps_of_seconds(cfg.get_num("memory", "train_s", 2.0), dt);
    const long retrieve_steps = steps_of_seconds(cfg.get_num("memory", "retrieve_s", 0.2), dt);
    const int learned = static_cast<int>(cfg.get_int("memory", "learned_pattern", 0));
    const double init_w = cfg.get_num("memory", "init_weight", 3.0);
    const double w_in = cfg.get_num("memory", "input_weight", 16.0);
    const double w_sic = cfg.get_num("memory", "sic_output_weight", 20.0);
    const long snapshot_steps = steps_of_ms(cfg.get_num("memory", "snapshot_ms", 10.0), dt);
    const std::string rule_name = cfg.get_str("memory", "rule", "combined");
    const RuleKind rule = rule_name == "stdp" ? RuleKind::stdp : RuleKind::combined;
    const PatternSet set = patterns_from_config(cfg, n_sensory);
    if (learned < 0 || learned >= static_cast<int>(set.patterns.size())) {
        throw std::runtime_error("memory.learned_pattern out of range");
    }

    Network net(opt.seed);
    load_plasticity(cfg, net);

    std::vector<std::uint32_t> sensory;
    for (int i = 0; i < n_sensory; ++i) sensory.push_back(net.add_poisson(set.baseline_rate_hz, dt));
    const CompartmentConfig mem_cfg =
        neuron_from_config(cfg, "memory", "mem", CompartmentConfig{1024, 2048, 12, 0, 0, true});
    const auto memory_neuron = net.add_neuron(mem_cfg);

    std::vector<std::size_t> plastic;
    for (auto s : sensory) plastic.push_back(net.add_synapse(s, memory_neuron, init_w, 1, rule));

    std::optional<std::size_t> astro;
    AstrocyteUnitIds ids{};
    if (!opt.ablate_astrocyte) {
        const auto table = table_from_config(cfg, "astrocyte", opt.table_threads);
        astro = create_astrocyte(net, prototype_from_config(cfg, "astrocyte"), table);
        ids = net.astro_units(*astro);
        for (auto s : sensory) net.add_synapse(s, ids.sr, w_in, 1);
        net.add_synapse(ids.sg, memory_neuron, w_sic, 1);
        const auto ch = net.add_reward_channel(*astro);
        for (auto si : plastic) net.tag_reward(ch, si);
    }

    auto apply_pattern = [&](int idx) {
        for (int i = 0; i < n_sensory; ++i) net.set_poisson_rate(sensory[i], set.baseline_rate_hz);
        for (int b : set.patterns[static_cast<std::size_t>(idx)]) {
            net.set_poisson_rate(sensory[static_cast<std::size_t>(b)], set.active_rate_hz);
        }
    };

    std::vector<SpikeEvent> events;
    std::vector<WeightSnapshot> weight_rows;
    std::vector<std::vector<double>> series(plastic.size());
    std::vector<long> ip3_steps, sg_steps;
    std::vector<long> retrieval_counts(set.patterns.size(), 0);

    auto snapshot = [&](long t) {
        for (std::size_t i = 0; i < plastic.size(); ++i) {
            const auto& syn = net.synapses()[plastic[i]];
            weight_rows.push_back({t, syn.pre, syn.post, syn.weight});
            series[i].push_back(syn.weight);
        }
    };

    auto run_phase = [&](long steps, int counting_pattern) {
        for (long k = 0; k < steps; ++k) {
            const long t = net.now();
            if (t % snapshot_steps == 0) snapshot(t);
            for (const auto& ev : net.step()) {
                events.push_back(ev);
                if (astro && ev.unit_id == ids.ip3) ip3_steps.push_back(ev.step);
                if (astro && ev.unit_id == ids.sg) sg_steps.push_back(ev.step);
                if (counting_pattern >= 0 && ev.unit_id == memory_neuron) {
                    retrieval_counts[static_cast<std::size_t>(counting_pattern)] += 1;
                }
            }
        }
    };

    apply_pattern(learned);
    run_phase(train_steps, -1);
    for (std::size_t p = 0; p < set.patterns.size(); ++p) {
        apply_pattern(static_cast<int>(p));
        run_phase(retrieve_steps, static_cast<int>(p));
    }
    snapshot(net.now());

    std::vector<double> final_weights;
    for (auto si : plastic) final_weights.push_back(net.synapses()[si].weight);

    const auto& learned_blocks = set.patterns[static_cast<std::size_t>(learned)];
    bool off_pattern_negative = true;
    for (int i = 0; i < n_sensory; ++i) {
        const bool in_pattern =
            std::find(learned_blocks.begin(), learned_blocks.end(), i) != learned_blocks.end();
        if (!in_pattern && final_weights[static_cast<std::size_t>(i)] >= 0.0) {
            off_pattern_negative = false;
        }
    }
    bool learned_max = true;
    for (std::size_t p = 0; p < retrieval_counts.size(); ++p) {
        if (p != static_cast<std::size_t>(learned) &&
            retrieval_counts[p] >= retrieval_counts[static_cast<std::size_t>(learned)]) {
            learned_max = false;
        }
    }

    ExperimentResult res;
    res.title = "memory: spike raster";
    res.spikes = events;
    res.weights = weight_rows;
    res.weight_series = series;
    res.n_steps = net.now();
    res.n_units = static_cast<std::uint32_t>(net.unit_count());
    for (std::size_t p = 0; p < retrieval_counts.size(); ++p) {
        res.bar_labels.push_back("p" + std::to_string(p));
        res.bar_values.push_back(static_cast<double>(retrieval_counts[p]));
    }
    res.summary = {
        {"experiment", "memory"},
        {"provenance", provenance(cfg, opt.seed)},
        {"ablated", opt.ablate_astrocyte},
        {"rule", rule_name},
        {"learned_pattern", learned},
        {"retrieval_counts", retrieval_counts},
        {"final_weights", final_weights},
        {"learned_pattern_max", learned_max},
        {"off_pattern_weights_negative", off_pattern_negative},
        {"first_ip3_s",
         ip3_steps.empty() ? -1.0 : static_cast<double>(ip3_steps[0]) * dt / 1000.0},
        {"ip3_spike_count", ip3_steps.size()},
        {"sg_spike_count", sg_steps.size()},
    };

    // the ablated twin runs alongside as the control; with the astrocyte
    // removed the combined rule degrades to plain stdp
    if (!opt.ablate_astrocyte) {
        RunOptions control_opt = opt;
        control_opt.ablate_astrocyte = true;
        const auto control = run_memory(cfg, control_opt);
        bool any_negative = false;
        for (double w : control.summary["final_weights"]) {
            if (w < 0.0) any_negative = true;
        }
        res.summary["control"] = {
            {"retrieval_counts", control.summary["retrieval_counts"]},
            {"final_weights", control.summary["final_weights"]},
            {"learned_pattern_max", control.summary["learned_pattern_max"]},
            {"any_weight_negative", any_negative},
        };
    }
    return res;
}

// ---------------------------------------------------------------------------
// chaos: BHP-trained astrocyte monitors an Ising-driven neuron sheet

inline ExperimentResult run_chaos(const ConfigFile& cfg, const RunOptions& opt) {
    const double dt = dt_ms_of(cfg);
    const double tick_ms = cfg.get_num("chaos", "tick_ms", 5.0);
    if (tick_ms <= 0.0) throw std::runtime_error("chaos.tick_ms must be positive");
    const long tick_steps = steps_of_ms(tick_ms, dt);
    const int grid = static_cast<int>(cfg.get_int("chaos", "sample_grid", 42));
    const int sweeps_per_tick = static_cast<int>(cfg.get_int("chaos", "sweeps_per_tick", 1));
    const long train_steps = steps_of_seconds(cfg.get_num("chaos", "train_s", 25.0), dt);
    const long test_steps = steps_of_seconds(cfg.get_num("chaos", "test_s", 25.0), dt);
    const double train_window_s = static_cast<double>(train_steps) * dt / 1000.0;
    const double test_window_s = static_cast<double>(test_steps) * dt / 1000.0;
    const int transition_sweeps = static_cast<int>(cfg.get_int("chaos", "transition_sweeps", 200));
    const double w_init = cfg.get_num("bhp", "w_init", 0.0);
    const int n_inputs = grid * grid;
    const double r_max = cfg.get_num("chaos", "r_max_hz", 1000.0 / tick_ms);

    CouplingSpec spec;
    spec.cluster_rows = static_cast<int>(cfg.get_int("ising", "cluster_rows", 16));
    spec.cluster_cols = static_cast<int>(cfg.get_int("ising", "cluster_cols", 16));
    spec.intra_lo = cfg.get_num("ising", "intra_lo", 1.2);
    spec.intra_hi = cfg.get_num("ising", "intra_hi", 1.8);
    spec.inter_strength = cfg.get_num("ising", "inter_strength", 0.15);
    spec.seed = static_cast<std::uint64_t>(cfg.get_int("ising", "seed", 1));
    const int lattice_size = static_cast<int>(cfg.get_int("ising", "size", 256));

    // ordered/chaotic temperatures: classified unless pinned in the config;
    // a replayed drive carries its own states, so no classification then
    double t_ordered = 0.0, t_chaotic = 0.0;
    nlohmann::json chi_curve = nlohmann::json::array();
    if (cfg.has("ising", "t_ordered") && cfg.has("ising", "t_chaotic")) {
        t_ordered = cfg.get_num("ising", "t_ordered");
        t_chaotic = cfg.get_num("ising", "t_chaotic");
    } else if (opt.replay_path.empty()) {
        ClassifyOptions copts;
        copts.lattice_size = lattice_size;
        copts.equilibration_sweeps = static_cast<int>(cfg.get_int("ising", "classify_equil", 150));
        copts.sample_sweeps = static_cast<int>(cfg.get_int("ising", "classify_sample", 300));
        copts.seed = spec.seed;
        std::vector<double> t_grid;
        if (cfg.has("ising", "t_grid")) {
            t_grid = cfg.get_num_list("ising", "t_grid");
        } else {
            for (double t = 1.6; t <= 5.01; t += 0.25) t_grid.push_back(t);
        }
        const auto cls = classify_states(spec, t_grid, copts);
        t_ordered = cls.t_ordered;
        t_chaotic = cls.t_chaotic;
        for (std::size_t i = 0; i < cls.grid.size(); ++i) {
            chi_curve.push_back({{"t", cls.grid[i]}, {"chi", cls.chi[i]}});
        }
    }

    Network net(opt.seed);
    load_bhp(cfg, net);

    std::vector<std::uint32_t> inputs;
    for (int i = 0; i < n_inputs; ++i) inputs.push_back(net.add_stim());

    AstrocytePrototype proto = prototype_from_config(cfg, "astrocyte");
    const auto table = table_from_config(cfg, "astrocyte", opt.table_threads);
    const auto astro = create_astrocyte(net, proto, table);
    const auto ids = net.astro_units(astro);
    std::vector<std::size_t> bhp_synapses;
    for (auto s : inputs) bhp_synapses.push_back(net.add_synapse(s, ids.sr, w_init, 1, RuleKind::bhp));

    if (!opt.replay_path.empty() && !opt.record_drive.empty()) {
        throw std::runtime_error("replay and drive recording are mutually exclusive");
    }

    // drive: either a recorded stream or the Ising lattice
    std::optional<IsingLattice> lattice;
    std::vector<std::vector<std::uint32_t>> replay_by_step;
    const long total_steps = train_steps + 2 * test_steps;
    if (!opt.replay_path.empty()) {
        std::ifstream in(opt.replay_path);
        if (!in) throw std::runtime_error("cannot open replay file: " + opt.replay_path);
        const auto events = read_spikes_csv(in);
        replay_by_step.assign(static_cast<std::size_t>(total_steps), {});
        for (const auto& ev : events) {
            if (ev.step >= total_steps) {
                throw std::runtime_error("replay stream extends past the configured duration");
            }
            if (ev.unit_id >= static_cast<std::uint32_t>(n_inputs)) {
                throw std::runtime_error("replay stream references input beyond the sample grid");
            }
            replay_by_step[static_cast<std::size_t>(ev.step)].push_back(ev.unit_id);
        }
    } else {
        lattice.emplace(spec, lattice_size, t_ordered, spec.seed);
    }

    std::ofstream drive_out;
    if (!opt.record_drive.empty()) {
        drive_out.open(opt.record_drive, std::ios::binary);
        if (!drive_out) throw std::runtime_error("cannot open drive output: " + opt.record_drive);
        drive_out << "step,unit_id\n";
    }

    std::vector<SpikeEvent> astro_events;
    std::vector<WeightSnapshot> weight_rows;
    const long snapshot_steps = steps_of_ms(cfg.get_num("chaos", "snapshot_ms", 2500.0), dt);
    std::vector<long> train_counts(static_cast<std::size_t>(n_inputs), 0);
    std::vector<long> phase_counts(static_cast<std::size_t>(n_inputs), 0);

    long ip3_ordered = 0, ip3_chaotic = 0;
    double active_sum_ordered = 0.0, active_sum_chaotic = 0.0;
    long ticks_ordered = 0, ticks_chaotic = 0;

    enum class Phase { train, test_ordered, test_chaotic };
    auto run_phase = [&](Phase phase, long steps) {
        for (long k = 0; k < steps; ++k) {
            const long t = net.now();
            if (t % snapshot_steps == 0) {
                for (auto si : bhp_synapses) {
                    const auto& syn = net.synapses()[si];
                    weight_rows.push_back({t, syn.pre, syn.post, syn.rule == RuleKind::bhp
                                                                     ? syn.bhp.w
                                                                     : syn.weight});
                }
            }
            long active = -1;
            if (t % tick_steps == 0) {
                active = 0;
                if (lattice) {
                    for (int s = 0; s < sweeps_per_tick; ++s) lattice->sweep();
                    const auto sample = downsample(*lattice, grid);
                    for (int i = 0; i < n_inputs; ++i) {
                        if (sample[static_cast<std::size_t>(i)] > 0) {
                            net.set_stim(inputs[static_cast<std::size_t>(i)]);
                            active += 1;
                            if (drive_out.is_open()) drive_out << t << ',' << i << '\n';
                        }
                    }
                } else {
                    for (auto i : replay_by_step[static_cast<std::size_t>(t)]) {
                        net.set_stim(inputs[i]);
                        active += 1;
                    }
                }
            }
            for (const auto& ev : net.step()) {
                if (ev.unit_id >= ids.sr) {
                    astro_events.push_back(ev);
                    if (ev.unit_id == ids.ip3) {
                        if (phase == Phase::test_ordered) ip3_ordered += 1;
                        if (phase == Phase::test_chaotic) ip3_chaotic += 1;
                    }
                } else if (ev.unit_id < static_cast<std::uint32_t>(n_inputs)) {
                    if (phase == Phase::train) train_counts[ev.unit_id] += 1;
                    phase_counts[ev.unit_id] += 1;
                }
            }
            if (active >= 0) {
                if (phase == Phase::test_ordered) {
                    active_sum_ordered += static_cast<double>(active);
                    ticks_ordered += 1;
                } else if (phase == Phase::test_chaotic) {
                    active_sum_chaotic += static_cast<double>(active);
                    ticks_chaotic += 1;
                }
            }
        }
    };

    run_phase(Phase::train, train_steps);

    // freeze the learned weights for the test phases
    std::vector<double> learned_w;
    for (auto si : bhp_synapses) {
        learned_w.push_back(net.synapse(si).bhp.w);
        net.synapse(si).rule = RuleKind::none;
        net.synapse(si).weight = net.synapse(si).bhp.w;
    }
    std::vector<double> train_rates;
    for (int i = 0; i < n_inputs; ++i) {
        train_rates.push_back(static_cast<double>(train_counts[static_cast<std::size_t>(i)]) /
                              train_window_s);
    }

    std::string pgm_ordered, pgm_chaotic;
    phase_counts.assign(static_cast<std::size_t>(n_inputs), 0);
    run_phase(Phase::test_ordered, test_steps);
    std::vector<long> ordered_counts = phase_counts;
    if (lattice) {
        std::ostringstream os;
        write_spin_pgm(*lattice, os);
        pgm_ordered = os.str();
        lattice->set_temperature(t_chaotic);
        for (int s = 0; s < transition_sweeps; ++s) lattice->sweep();
    }
    phase_counts.assign(static_cast<std::size_t>(n_inputs), 0);
    run_phase(Phase::test_chaotic, test_steps);
    std::vector<long> chaotic_counts = phase_counts;
    if (lattice) {
        std::ostringstream os;
        write_spin_pgm(*lattice, os);
        pgm_chaotic = os.str();
    }

    const auto wave_ordered = measure_wave_frequency(ip3_ordered, test_window_s);
    const auto wave_chaotic = measure_wave_frequency(ip3_chaotic, test_window_s);
    const double ratio = wave_ordered.events_per_second > 0.0
                             ? wave_chaotic.events_per_second / wave_ordered.events_per_second
                             : (wave_chaotic.events_per_second > 0.0 ? 1e9 : 0.0);
    const double mean_active_ordered =
        ticks_ordered > 0 ? active_sum_ordered / static_cast<double>(ticks_ordered) : 0.0;
    const double mean_active_chaotic =
        ticks_chaotic > 0 ? active_sum_chaotic / static_cast<double>(ticks_chaotic) : 0.0;
    const double activity_rel_diff =
        (mean_active_ordered + mean_active_chaotic) > 0.0
            ? std::abs(mean_active_ordered - mean_active_chaotic) /
                  (0.5 * (mean_active_ordered + mean_active_chaotic))
            : 0.0;

    const double rho = spearman(learned_w, train_rates);

    // reference chaos detector evaluated on measured rates
    ChaosMonitorConfig mon;
    mon.n_inputs = static_cast<std::size_t>(n_inputs);
    mon.r_max = r_max;
    int n_floored = 0;
    RateEstimates rates;
    rates.long_term.resize(static_cast<std::size_t>(n_inputs));
    for (int i = 0; i < n_inputs; ++i) {
        double rhat = train_rates[static_cast<std::size_t>(i)];
        if (rhat <= 0.0) {
            rhat = 1.0 / train_window_s; // one event per window
            n_floored += 1;
        }
        rates.long_term[static_cast<std::size_t>(i)] = std::min(rhat, mon.r_max);
    }
    auto f_astro_of = [&](const std::vector<long>& counts) {
        rates.short_term.resize(static_cast<std::size_t>(n_inputs));
        for (int i = 0; i < n_inputs; ++i) {
            const double r = static_cast<double>(counts[static_cast<std::size_t>(i)]) /
                             test_window_s;
            rates.short_term[static_cast<std::size_t>(i)] = std::min(r, mon.r_max);
        }
        return f_astro_reference(rates, mon);
    };
    const double f_ordered = f_astro_of(ordered_counts);
    const double f_chaotic = f_astro_of(chaotic_counts);

    ExperimentResult res;
    res.title = "chaos: astrocyte events";
    res.spikes = astro_events;
    res.weights = weight_rows;
    res.n_steps = net.now();
    res.n_units = static_cast<std::uint32_t>(net.unit_count());
    res.bar_labels = {"ordered_hz", "chaotic_hz"};
    res.bar_values = {wave_ordered.events_per_second, wave_chaotic.events_per_second};

    std::ostringstream learned_csv;
    learned_csv << "input_id,weight,train_rate_hz\n";
    for (int i = 0; i < n_inputs; ++i) {
        learned_csv << i << ',' << format_double(learned_w[static_cast<std::size_t>(i)]) << ','
                    << format_double(train_rates[static_cast<std::size_t>(i)]) << '\n';
    }
    res.extra_files.emplace_back("learned_weights.csv", learned_csv.str());
    if (!pgm_ordered.empty()) res.extra_files.emplace_back("spins_ordered.pgm", pgm_ordered);
    if (!pgm_chaotic.empty()) res.extra_files.emplace_back("spins_chaotic.pgm", pgm_chaotic);

    res.summary = {
        {"experiment", "chaos"},
        {"provenance", provenance(cfg, opt.seed)},
        {"replayed", !opt.replay_path.empty()},
        {"t_ordered", t_ordered},
        {"t_chaotic", t_chaotic},
        {"susceptibility_curve", chi_curve},
        {"wave_ordered", {{"phase", "ordered"},
                          {"events_per_second", wave_ordered.events_per_second},
                          {"window_s", wave_ordered.window_s}}},
        {"wave_chaotic", {{"phase", "chaotic"},
                          {"events_per_second", wave_chaotic.events_per_second},
                          {"window_s", wave_chaotic.window_s}}},
        {"frequency_ratio", ratio},
        {"mean_active_ordered", mean_active_ordered},
        {"mean_active_chaotic", mean_active_chaotic},
        {"activity_rel_diff", activity_rel_diff},
        {"spearman_weight_vs_rate", rho},
        {"f_astro_ordered", f_ordered},
        {"f_astro_chaotic", f_chaotic},
        {"rate_floored_inputs", n_floored},
    };
    return res;
}

// ---------------------------------------------------------------------------
// output emission

inline void emit_outputs(const ExperimentResult& res, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + out_dir.string());

    {
        std::ostringstream os;
        write_spikes_csv(os, res.spikes);
        write_text_file(out_dir / "spikes.csv", os.str());
    }
    {
        std::ostringstream os;
        write_weights_csv(os, res.weights);
        write_text_file(out_dir / "weights.csv", os.str());
    }
    write_text_file(out_dir / "summary.json", res.summary.dump(2) + "\n");
    {
        std::ostringstream os;
        write_raster_svg(os, res.spikes, std::max<long>(1, res.n_steps),
                         std::max<std::uint32_t>(1, res.n_units), res.title);
        write_text_file(out_dir / "raster.svg", os.str());
    }
    {
        std::ostringstream os;
        double lo = 0.0, hi = 1.0;
        for (const auto& s : res.weight_series) {
            for (double v : s) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
        write_weight_trajectories_svg(os, res.weight_series, lo, hi, "weight trajectories");
        write_text_file(out_dir / "weights.svg", os.str());
    }
    if (!res.bar_values.empty()) {
        std::ostringstream os;
        write_bars_svg(os, res.bar_labels, res.bar_values, "summary metrics");
        write_text_file(out_dir / "metrics.svg", os.str());
    }
    for (const auto& [name, content] : res.extra_files) {
        write_text_file(out_dir / name, content);
    }
}

inline ExperimentResult run_experiment(const std::string& name, const ConfigFile& cfg,
                                       const RunOptions& opt) {
    if (name != "chaos" && (!opt.replay_path.empty() || !opt.record_drive.empty())) {
        throw std::runtime_error("drive replay/recording is only supported by the chaos experiment");
    }
    if (name == "sync") return run_sync(cfg, opt);
    if (name == "group-sync") return run_group_sync(cfg, opt);
    if (name == "memory") return run_memory(cfg, opt);
    if (name == "chaos") return run_chaos(cfg, opt);
    throw std::runtime_error("unknown experiment: " + name);
}

} // namespace snan

#endif
