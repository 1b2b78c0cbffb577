#ifndef SNAN_CHAOS_HPP
#define SNAN_CHAOS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "snan/plasticity.hpp"

namespace snan {

enum class Activation { identity, rectifier };

inline double apply_activation(Activation g, double x) {
    return g == Activation::rectifier ? std::max(0.0, x) : x;
}

struct ChaosMonitorConfig {
    std::size_t n_inputs = 1764;
    double r_max = 200.0;        // Hz
    double eta = 0.0;            // 0 -> defaults to 1/N
    Activation g = Activation::identity;
    BhpParams bhp{};
    double train_duration_s = 25.0;
    double test_duration_s = 25.0;
    double rate_window_ms = 100.0; // short-term rate window

    double effective_eta() const {
        return eta > 0.0 ? eta : 1.0 / static_cast<double>(n_inputs);
    }
};

struct RateEstimates {
    std::vector<double> short_term; // r_i, Hz
    std::vector<double> long_term;  // r-hat_i, Hz
};

inline void validate_rates(const RateEstimates& rates, double r_max) {
    if (rates.short_term.size() != rates.long_term.size() || rates.short_term.empty()) {
        throw std::invalid_argument("rate estimates: size mismatch or empty");
    }
    for (std::size_t i = 0; i < rates.short_term.size(); ++i) {
        if (rates.short_term[i] < 0.0 || rates.short_term[i] > r_max ||
            rates.long_term[i] < 0.0 || rates.long_term[i] > r_max) {
            throw std::invalid_argument("rate estimates: rates must lie in [0, r_max]");
        }
        if (rates.long_term[i] == 0.0) {
            throw std::invalid_argument("rate estimates: long-term rate of zero diverges");
        }
    }
}

// Reference form: g( (1/N) * sum_i (r_i / r_max) * ln(r_max / rhat_i) ).
// Compares run-time short-term rates against memorized long-term rates.
inline double f_astro_reference(const RateEstimates& rates, const ChaosMonitorConfig& cfg) {
    validate_rates(rates, cfg.r_max);
    const std::size_t n = rates.short_term.size();
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sum += (rates.short_term[i] / cfg.r_max) * std::log(cfg.r_max / rates.long_term[i]);
    }
    return apply_activation(cfg.g, sum / static_cast<double>(n));
}

// Weighted-sum decomposition: W_i = ln(r_max / rhat_i), N_i = r_i / r_max,
// f = g(eta * sum W_i * N_i) with eta = 1/N.
struct WeightedSumForm {
    std::vector<double> weights; // W_i
    std::vector<double> inputs;  // N_i
    double eta = 0.0;
};

inline WeightedSumForm decompose_f_astro(const RateEstimates& rates,
                                         const ChaosMonitorConfig& cfg) {
    validate_rates(rates, cfg.r_max);
    WeightedSumForm form;
    form.eta = 1.0 / static_cast<double>(rates.short_term.size());
    form.weights.reserve(rates.long_term.size());
    form.inputs.reserve(rates.short_term.size());
    for (double rhat : rates.long_term) form.weights.push_back(std::log(cfg.r_max / rhat));
    for (double r : rates.short_term) form.inputs.push_back(r / cfg.r_max);
    return form;
}

inline double f_astro_weighted(const WeightedSumForm& form, Activation g) {
    double sum = 0.0;
    for (std::size_t i = 0; i < form.weights.size(); ++i) {
        sum += form.weights[i] * form.inputs[i];
    }
    return apply_activation(g, form.eta * sum);
}

// Evolve one BHP state per input over recorded spike trains; returns final
// states. Column t of each train is the binary spike indicator at step t.
inline std::vector<BhpState> train_bhp(const std::vector<std::vector<std::uint8_t>>& spike_trains,
                                       const BhpParams& params, double w_init = 0.0) {
    params.validate();
    std::vector<BhpState> states(spike_trains.size());
    for (auto& s : states) s.w = w_init;
    for (std::size_t i = 0; i < spike_trains.size(); ++i) {
        for (std::uint8_t x0 : spike_trains[i]) {
            bhp_step(states[i], x0 ? 1 : 0, params);
        }
    }
    return states;
}

struct WaveFrequencyReport {
    double events_per_second = 0.0;
    double window_s = 0.0;
    long event_count = 0;
};

// Calcium-wave frequency: IP3 spike events per second over the window.
inline WaveFrequencyReport measure_wave_frequency(long ip3_event_count, double window_s) {
    if (window_s <= 0.0) throw std::invalid_argument("measure_wave_frequency: window must be > 0");
    WaveFrequencyReport rep;
    rep.event_count = ip3_event_count;
    rep.window_s = window_s;
    rep.events_per_second = static_cast<double>(ip3_event_count) / window_s;
    return rep;
}

// Spearman rank correlation with midrank ties.
inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2) {
        throw std::invalid_argument("spearman: need two equal-length vectors, size >= 2");
    }
    auto ranks = [](const std::vector<double>& v) {
        const std::size_t n = v.size();
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](std::size_t x, std::size_t y) { return v[x] < v[y]; });
        std::vector<double> r(n);
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
            const double mid = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
            for (std::size_t k = i; k <= j; ++k) r[order[k]] = mid;
            i = j + 1;
        }
        return r;
    };
    const std::vector<double> ra = ranks(a);
    const std::vector<double> rb = ranks(b);
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= n;
    mb /= n;
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        cov += (ra[i] - ma) * (rb[i] - mb);
        va += (ra[i] - ma) * (ra[i] - ma);
        vb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (va == 0.0 || vb == 0.0) return 0.0;
    return cov / std::sqrt(va * vb);
}

} // namespace snan

#endif
