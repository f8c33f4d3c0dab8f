#pragma once

#include "core/domain.hpp"
#include "core/rng.hpp"

#include <cstdint>

namespace mmqkd {

// One clock period of the source: a phase-encoded pulse pair (X) or a single
// early/late pulse (Z), with its intensity class and randomized global phase.
struct EmittedSymbol {
    std::uint64_t index = 0;
    Basis basis = Basis::Z;
    int bit = 0;
    IntensityClass intensity = IntensityClass::signal;
    double mean_photons = 0.0;    // total over the symbol
    double phase_diff_rad = 0.0;  // X only: 0 or pi between the pair
    double global_phase_rad = 0.0;
    int slot = -1;                // Z: 0 early, 1 late; X: -1 (energy in both)
};

// Maps a (possibly repeated) pattern position to the emitted symbol for the
// given absolute symbol index; the global phase is an independent draw per
// index so repeated pattern cycles stay phase-randomized.
EmittedSymbol encode_symbol(const SymbolPattern& pattern, std::uint64_t index,
                            const ProtocolParams& protocol, const SeededRng& rng);

// Poisson photon-number draw for a weak coherent pulse.
std::uint32_t photon_number(const EmittedSymbol& symbol, SeededRng& rng);

} // namespace mmqkd
