#pragma once

#include "rng.hpp"

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mmqkd {

// Error taxonomy shared by the whole core.  The C API maps these onto its
// status codes; the CLI maps them onto exit codes.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CalibrationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NoSignalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InsufficientDataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Basis : std::uint8_t { X, Z };

enum class IntensityClass : std::uint8_t { signal, decoy, vacuum };

const char* to_string(Basis b);
const char* to_string(IntensityClass c);
Basis basis_from_string(const std::string& s);
IntensityClass intensity_from_string(const std::string& s);

// Mean photon numbers of the three pulse classes (signal > decoy > vacuum >= 0).
struct IntensityLevels {
    double signal = 0.4;
    double decoy = 0.1;
    double vacuum = 0.0;

    double mean(IntensityClass c) const;
    void validate() const;
};

// Clocking, pattern and pulse-class parameters of one link configuration.
struct ProtocolParams {
    double clock_hz = 1.0e9;          // qubit rate
    std::size_t pattern_length = 1000; // symbols per repeated pattern
    double acquisition_s = 10.0;      // histogram integration time
    double basis_bias_pz = 0.5;       // P(symbol in Z basis)
    std::array<double, 3> intensity_probs{0.98, 0.015, 0.005}; // signal/decoy/vacuum
    double gate_s = 250e-12;          // scoring gate width centred on a slot
    double slave_separation_s = 500e-12; // sub-pulse separation within a symbol
    IntensityLevels intensities{};

    double symbol_period_s() const { return 1.0 / clock_hz; }
    double pattern_period_s() const { return pattern_length / clock_hz; }
    // Repetitions of the pattern inside one acquisition (rounded down).
    std::uint64_t pattern_repetitions() const;
    std::uint64_t symbols_per_acquisition() const;

    void validate() const;
};

struct PatternSymbol {
    std::uint8_t bit;        // 0/1
    Basis basis;
    IntensityClass intensity;
};

// Fixed random symbol train, repeated for the whole acquisition.
struct SymbolPattern {
    std::vector<PatternSymbol> symbols;

    std::size_t size() const { return symbols.size(); }
    const PatternSymbol& at(std::size_t i) const { return symbols[i]; }
};

// Shannon binary entropy H2(p); 0 at p=0 and p=1, throws outside [0,1].
double binary_entropy(double p);

// Draw a pattern of `length` symbols: basis Z with probability `basis_bias_pz`,
// bit uniform, intensity class from `intensity_probs` (signal/decoy/vacuum).
SymbolPattern random_pattern(std::size_t length, double basis_bias_pz,
                             const std::array<double, 3>& intensity_probs,
                             SeededRng& rng);

} // namespace mmqkd
