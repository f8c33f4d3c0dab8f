#pragma once

#include <cstdint>
#include <string_view>

namespace mmqkd {

// Deterministic counter-seeded generator (xoshiro256** core, splitmix64 seeding).
// Streams are split by text label: stream("channel/d=10/trial=3") derives an
// independent substream from the parent key, so every module/trial draws from
// its own deterministic sequence and the draw order of one module can never
// perturb another.  Identical seed + identical labels => identical draws,
// which is what makes whole-run outputs byte-reproducible.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed);

    // Independent substream addressed by label (hashes label into the key).
    SeededRng stream(std::string_view label) const;
    // Indexed substream, used for O(1) per-symbol streams in event mode.
    SeededRng substream(std::uint64_t index) const;

    std::uint64_t next_u64();
    double uniform01();                       // [0, 1)
    double uniform(double lo, double hi);
    double normal(double mean, double sigma); // Marsaglia polar method
    std::uint64_t poisson(double mean);       // exact for all means (Knuth / PTRD)
    std::uint64_t key() const { return key_; }

private:
    SeededRng(std::uint64_t key, bool /*raw*/);
    void init_state(std::uint64_t key);

    std::uint64_t key_;
    std::uint64_t s_[4];
    bool has_spare_normal_ = false;
    double spare_normal_ = 0.0;
};

} // namespace mmqkd
