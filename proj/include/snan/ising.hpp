#ifndef SNAN_ISING_HPP
#define SNAN_ISING_HPP

#include <cmath>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "snan/rng.hpp"

namespace snan {

// Rectangular cluster partition: couplings inside a block are drawn uniformly
// from [intra_lo, intra_hi], edges crossing blocks get the weaker
// inter_strength. Strong intra-block coupling freezes per-block spin patterns
// at low temperature.
struct CouplingSpec {
    int cluster_rows = 16;
    int cluster_cols = 16;
    double intra_lo = 1.2;
    double intra_hi = 1.8;
    double inter_strength = 0.15;
    std::uint64_t seed = 1;

    void validate() const {
        if (cluster_rows < 1 || cluster_cols < 1) {
            throw std::invalid_argument("coupling spec: cluster grid must be >= 1x1");
        }
        if (intra_lo > intra_hi) {
            throw std::invalid_argument("coupling spec: intra_lo > intra_hi");
        }
        if (!(intra_lo > inter_strength) || inter_strength < 0.0) {
            throw std::invalid_argument("coupling spec: need intra > inter >= 0");
        }
    }
};

// 2-D Ising lattice with periodic boundaries and per-edge couplings.
// Metropolis proposals run in raster order for exact determinism.
class IsingLattice {
public:
    IsingLattice(const CouplingSpec& spec, double temperature, std::uint64_t seed)
        : size_(0), temperature_(temperature), rng_(seed) {
        spec.validate();
        init(spec, 256);
    }

    IsingLattice(const CouplingSpec& spec, int size, double temperature, std::uint64_t seed)
        : size_(0), temperature_(temperature), rng_(seed) {
        spec.validate();
        if (size < 2) throw std::invalid_argument("lattice size must be >= 2");
        init(spec, size);
    }

    int size() const { return size_; }
    double temperature() const { return temperature_; }
    void set_temperature(double t) { temperature_ = t; }

    int spin(int r, int c) const { return spins_[idx(r, c)]; }
    const std::vector<std::int8_t>& spins() const { return spins_; }
    void set_spins(const std::vector<std::int8_t>& s) {
        if (s.size() != spins_.size()) throw std::invalid_argument("spin field size mismatch");
        spins_ = s;
    }

    double coupling_right(int r, int c) const { return j_right_[idx(r, c)]; }
    double coupling_down(int r, int c) const { return j_down_[idx(r, c)]; }

    int cluster_of(int r, int c) const {
        const int br = r * cluster_rows_ / size_;
        const int bc = c * cluster_cols_ / size_;
        return br * cluster_cols_ + bc;
    }

    // One Metropolis sweep: size^2 single-spin proposals in raster order,
    // flip accepted with probability min(1, exp(-dE/T)).
    void sweep() {
        const double inv_t = 1.0 / temperature_;
        for (int r = 0; r < size_; ++r) {
            for (int c = 0; c < size_; ++c) {
                const std::size_t i = idx(r, c);
                const double delta_e = 2.0 * spins_[i] * local_field(r, c);
                if (delta_e <= 0.0 || rng_.next_double() < std::exp(-delta_e * inv_t)) {
                    spins_[i] = static_cast<std::int8_t>(-spins_[i]);
                }
            }
        }
    }

    // Per-spin magnetization in [-1, 1].
    double magnetization() const {
        long sum = 0;
        for (auto s : spins_) sum += s;
        return static_cast<double>(sum) / static_cast<double>(spins_.size());
    }

    double energy() const {
        double e = 0.0;
        for (int r = 0; r < size_; ++r) {
            for (int c = 0; c < size_; ++c) {
                const std::size_t i = idx(r, c);
                e -= j_right_[i] * spins_[i] * spins_[idx(r, wrap(c + 1))];
                e -= j_down_[i] * spins_[i] * spins_[idx(wrap(r + 1), c)];
            }
        }
        return e;
    }

private:
    void init(const CouplingSpec& spec, int size) {
        size_ = size;
        cluster_rows_ = spec.cluster_rows;
        cluster_cols_ = spec.cluster_cols;
        const std::size_t n = static_cast<std::size_t>(size_) * size_;
        j_right_.resize(n);
        j_down_.resize(n);
        spins_.resize(n);

        // couplings first, then spins, both from the same stream
        for (int r = 0; r < size_; ++r) {
            for (int c = 0; c < size_; ++c) {
                j_right_[idx(r, c)] = draw_coupling(spec, r, c, r, wrap(c + 1));
                j_down_[idx(r, c)] = draw_coupling(spec, r, c, wrap(r + 1), c);
            }
        }
        for (auto& s : spins_) s = rng_.next_bool() ? 1 : -1;
    }

    double draw_coupling(const CouplingSpec& spec, int r0, int c0, int r1, int c1) {
        if (cluster_of(r0, c0) == cluster_of(r1, c1)) {
            return spec.intra_lo + rng_.next_double() * (spec.intra_hi - spec.intra_lo);
        }
        return spec.inter_strength;
    }

    double local_field(int r, int c) const {
        const int left = wrap(c - 1);
        const int up = wrap(r - 1);
        return j_right_[idx(r, c)] * spins_[idx(r, wrap(c + 1))] +
               j_right_[idx(r, left)] * spins_[idx(r, left)] +
               j_down_[idx(r, c)] * spins_[idx(wrap(r + 1), c)] +
               j_down_[idx(up, c)] * spins_[idx(up, c)];
    }

    std::size_t idx(int r, int c) const { return static_cast<std::size_t>(r) * size_ + c; }
    int wrap(int x) const { return x < 0 ? x + size_ : (x >= size_ ? x - size_ : x); }

    int size_;
    int cluster_rows_ = 1;
    int cluster_cols_ = 1;
    double temperature_;
    Rng rng_;
    std::vector<double> j_right_;
    std::vector<double> j_down_;
    std::vector<std::int8_t> spins_;
};

struct SusceptibilityEstimate {
    double chi = 0.0;
    int n_samples = 0;
    double temperature = 0.0;
};

// chi = N * (<m^2> - <m>^2) / T over per-spin magnetization samples.
inline SusceptibilityEstimate susceptibility(const std::vector<double>& magnetization_samples,
                                             double temperature, std::size_t n_spins) {
    if (magnetization_samples.size() < 2) {
        throw std::invalid_argument("susceptibility: need at least 2 samples");
    }
    const double n = static_cast<double>(magnetization_samples.size());
    double mean = 0.0;
    for (double m : magnetization_samples) mean += m;
    mean /= n;
    double var = 0.0;
    for (double m : magnetization_samples) var += (m - mean) * (m - mean);
    var /= n;
    SusceptibilityEstimate est;
    est.chi = static_cast<double>(n_spins) * var / temperature;
    est.n_samples = static_cast<int>(magnetization_samples.size());
    est.temperature = temperature;
    return est;
}

struct ClassifyOptions {
    int lattice_size = 256;
    int equilibration_sweeps = 200;
    int sample_sweeps = 300;
    std::uint64_t seed = 1;
};

struct StateClassification {
    double t_ordered = 0.0;
    double t_chaotic = 0.0;
    std::vector<double> grid;
    std::vector<double> chi;
};

// Sweep the temperature grid, locate the susceptibility peak (the
// chaotic/fluctuating regime) and the warmest clearly-ordered temperature
// below it. The peak must fall strictly inside the grid.
inline StateClassification classify_states(const CouplingSpec& spec,
                                           const std::vector<double>& t_grid,
                                           const ClassifyOptions& opts = {}) {
    if (t_grid.size() < 3) {
        throw std::invalid_argument("classify_states: grid needs at least 3 temperatures");
    }
    for (std::size_t i = 1; i < t_grid.size(); ++i) {
        if (t_grid[i] <= t_grid[i - 1]) {
            throw std::invalid_argument("classify_states: grid must be strictly increasing");
        }
    }

    StateClassification out;
    out.grid = t_grid;
    for (double t : t_grid) {
        IsingLattice lat(spec, opts.lattice_size, t, opts.seed);
        for (int s = 0; s < opts.equilibration_sweeps; ++s) lat.sweep();
        std::vector<double> samples;
        samples.reserve(opts.sample_sweeps);
        for (int s = 0; s < opts.sample_sweeps; ++s) {
            lat.sweep();
            samples.push_back(lat.magnetization());
        }
        out.chi.push_back(susceptibility(samples, t,
                                         static_cast<std::size_t>(opts.lattice_size) *
                                             opts.lattice_size)
                              .chi);
    }

    std::size_t peak = 0;
    for (std::size_t i = 1; i < out.chi.size(); ++i) {
        if (out.chi[i] > out.chi[peak]) peak = i;
    }
    if (peak == 0 || peak + 1 == out.chi.size()) {
        throw std::runtime_error("classify_states: susceptibility peak not bracketed by the grid");
    }

    const double cutoff = 0.1 * out.chi[peak];
    bool found = false;
    for (std::size_t i = peak; i-- > 0;) {
        if (out.chi[i] < cutoff) {
            out.t_ordered = out.grid[i];
            found = true;
            break;
        }
    }
    if (!found) {
        throw std::runtime_error("classify_states: no ordered temperature below the peak");
    }
    out.t_chaotic = out.grid[peak];
    return out;
}

// Evenly spaced sample: indices floor(i * size / k) along each axis.
inline std::vector<std::int8_t> downsample(const IsingLattice& lat, int k = 42) {
    if (lat.size() < k) {
        throw std::invalid_argument("downsample: lattice side smaller than sample grid");
    }
    std::vector<std::int8_t> out;
    out.reserve(static_cast<std::size_t>(k) * k);
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            const int r = static_cast<int>(static_cast<long>(i) * lat.size() / k);
            const int c = static_cast<int>(static_cast<long>(j) * lat.size() / k);
            out.push_back(static_cast<std::int8_t>(lat.spin(r, c)));
        }
    }
    return out;
}

// Spin +1 fires this tick, spin -1 stays silent.
inline std::vector<std::uint8_t> spins_to_spikes(const std::vector<std::int8_t>& sample) {
    std::vector<std::uint8_t> spikes(sample.size());
    for (std::size_t i = 0; i < sample.size(); ++i) spikes[i] = sample[i] > 0 ? 1 : 0;
    return spikes;
}

// Plain-text grid (PGM P2) of the spin field, +1 -> 255, -1 -> 0.
inline void write_spin_pgm(const IsingLattice& lat, std::ostream& os) {
    os << "P2\n" << lat.size() << " " << lat.size() << "\n255\n";
    for (int r = 0; r < lat.size(); ++r) {
        for (int c = 0; c < lat.size(); ++c) {
            os << (lat.spin(r, c) > 0 ? 255 : 0);
            os << (c + 1 == lat.size() ? '\n' : ' ');
        }
    }
}

} // namespace snan

#endif
