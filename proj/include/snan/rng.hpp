#ifndef SNAN_RNG_HPP
#define SNAN_RNG_HPP

#include <cstdint>

namespace snan {

// Deterministic 64-bit generator (splitmix64). The standard library engines
// are portable but their distributions are not, so all uniform draws go
// through this class.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1), 53-bit resolution
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // uniform in [0, n)
    std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

    bool next_bool() { return (next_u64() & 1ULL) != 0; }

    // Independent stream derived from this seed and a salt; does not advance
    // the parent state.
    Rng fork(std::uint64_t salt) const {
        Rng mixer(state_ ^ (0xd1342543de82ef95ULL * (salt + 1)));
        return Rng(mixer.next_u64());
    }

    std::uint64_t state() const { return state_; }

private:
    std::uint64_t state_;
};

} // namespace snan

#endif
