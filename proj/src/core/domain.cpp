#include "domain.hpp"

#include <cmath>

namespace mmqkd {

const char* to_string(Basis b) {
    return b == Basis::X ? "X" : "Z";
}

const char* to_string(IntensityClass c) {
    switch (c) {
    case IntensityClass::signal: return "signal";
    case IntensityClass::decoy: return "decoy";
    default: return "vacuum";
    }
}

Basis basis_from_string(const std::string& s) {
    if (s == "X" || s == "x")
        return Basis::X;
    if (s == "Z" || s == "z")
        return Basis::Z;
    throw ConfigError("unknown basis '" + s + "' (expected X or Z)");
}

IntensityClass intensity_from_string(const std::string& s) {
    if (s == "signal")
        return IntensityClass::signal;
    if (s == "decoy")
        return IntensityClass::decoy;
    if (s == "vacuum")
        return IntensityClass::vacuum;
    throw ConfigError("unknown intensity class '" + s + "'");
}

double IntensityLevels::mean(IntensityClass c) const {
    switch (c) {
    case IntensityClass::signal: return signal;
    case IntensityClass::decoy: return decoy;
    default: return vacuum;
    }
}

void IntensityLevels::validate() const {
    if (!(signal > decoy && decoy > vacuum && vacuum >= 0.0))
        throw ConfigError("intensity levels must satisfy signal > decoy > vacuum >= 0");
}

std::uint64_t ProtocolParams::pattern_repetitions() const {
    return static_cast<std::uint64_t>(acquisition_s / pattern_period_s() + 0.5);
}

std::uint64_t ProtocolParams::symbols_per_acquisition() const {
    return pattern_repetitions() * pattern_length;
}

void ProtocolParams::validate() const {
    if (!(clock_hz > 0.0))
        throw ConfigError("clock_hz must be positive");
    if (pattern_length == 0)
        throw ConfigError("pattern_length must be positive");
    if (!(acquisition_s > 0.0))
        throw ConfigError("acquisition_s must be positive");
    if (!(basis_bias_pz > 0.0 && basis_bias_pz < 1.0))
        throw ConfigError("basis_bias_pz must lie in (0, 1)");
    double prob_sum = 0.0;
    for (double p : intensity_probs) {
        if (p < 0.0)
            throw ConfigError("intensity probabilities must be non-negative");
        prob_sum += p;
    }
    if (std::abs(prob_sum - 1.0) > 1e-9)
        throw ConfigError("intensity probabilities must sum to 1 (tolerance 1e-9)");
    if (!(gate_s > 0.0))
        throw ConfigError("gate_s must be positive");
    if (!(slave_separation_s > 0.0))
        throw ConfigError("slave_separation_s must be positive");
    if (gate_s > slave_separation_s)
        throw ConfigError("gate_s must not exceed slave_separation_s");
    if (2.0 * slave_separation_s > symbol_period_s() + 1e-18)
        throw ConfigError("two sub-pulse slots must fit into one symbol period");
    intensities.validate();
}

double binary_entropy(double p) {
    if (!(p >= 0.0 && p <= 1.0))
        throw std::domain_error("binary_entropy: argument outside [0, 1]");
    if (p == 0.0 || p == 1.0)
        return 0.0;
    return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

SymbolPattern random_pattern(std::size_t length, double basis_bias_pz,
                             const std::array<double, 3>& intensity_probs,
                             SeededRng& rng) {
    if (length == 0)
        throw ConfigError("random_pattern: length must be positive");
    if (!(basis_bias_pz >= 0.0 && basis_bias_pz <= 1.0))
        throw ConfigError("random_pattern: basis bias outside [0, 1]");
    double prob_sum = intensity_probs[0] + intensity_probs[1] + intensity_probs[2];
    if (intensity_probs[0] < 0 || intensity_probs[1] < 0 || intensity_probs[2] < 0 ||
        std::abs(prob_sum - 1.0) > 1e-9)
        throw ConfigError("random_pattern: intensity probabilities must be a distribution");

    SymbolPattern pattern;
    pattern.symbols.reserve(length);
    for (std::size_t i = 0; i < length; ++i) {
        PatternSymbol sym{};
        sym.basis = rng.uniform01() < basis_bias_pz ? Basis::Z : Basis::X;
        sym.bit = rng.uniform01() < 0.5 ? 0 : 1;
        const double u = rng.uniform01();
        if (u < intensity_probs[0])
            sym.intensity = IntensityClass::signal;
        else if (u < intensity_probs[0] + intensity_probs[1])
            sym.intensity = IntensityClass::decoy;
        else
            sym.intensity = IntensityClass::vacuum;
        pattern.symbols.push_back(sym);
    }
    return pattern;
}

} // namespace mmqkd
