#include "core/transmitter.hpp"

#include <numbers>

namespace mmqkd {

EmittedSymbol encode_symbol(const SymbolPattern& pattern, std::uint64_t index,
                            const ProtocolParams& protocol, const SeededRng& rng) {
    if (pattern.size() == 0) throw ConfigError("cannot encode from an empty pattern");
    const PatternSymbol& ps = pattern.at(index % pattern.size());

    EmittedSymbol out;
    out.index = index;
    out.basis = ps.basis;
    out.bit = ps.bit;
    out.intensity = ps.intensity;
    out.mean_photons = protocol.intensities.mean(ps.intensity);
    if (ps.basis == Basis::X) {
        out.phase_diff_rad = ps.bit ? std::numbers::pi : 0.0;
        out.slot = -1;
    } else {
        out.slot = ps.bit;
    }
    SeededRng phase = rng.stream("global-phase").substream(index);
    out.global_phase_rad = phase.uniform(0.0, 2.0 * std::numbers::pi);
    return out;
}

std::uint32_t photon_number(const EmittedSymbol& symbol, SeededRng& rng) {
    if (symbol.mean_photons < 0.0) throw ConfigError("mean photon number must be non-negative");
    return static_cast<std::uint32_t>(rng.poisson(symbol.mean_photons));
}

} // namespace mmqkd
