#pragma once

#include "core/channel.hpp"
#include "core/domain.hpp"
#include "core/receiver.hpp"

#include <cstdint>
#include <vector>

namespace mmqkd {

// Arrival-time histogram folded over one pattern period.
struct HistogramGrid {
    double bin_width_s = 15.625e-12;
    std::vector<std::uint64_t> counts; // pattern_period / bin_width bins
    double acquisition_s = 0.0;

    std::uint64_t total() const;
};

// Per-acquisition reduced measurement for one (distance, basis, launch, trial)
// cell.  For vacuum-intensity acquisitions `gain` holds the per-pulse click
// probability (the photon-ratio denominator is undefined at zero intensity).
struct LinkObservables {
    double distance_km = 0.0;
    Basis basis = Basis::Z;
    LaunchKind launch = LaunchKind::underfill;
    int trial = 0;
    double qber = 0.0;
    double gain = 0.0;
    double loss_db = 0.0;
    IntensityClass intensity = IntensityClass::signal;
};

// Mean and scatter over repeated trials of one cell.
struct TrialAggregate {
    double distance_km = 0.0;
    Basis basis = Basis::Z;
    LaunchKind launch = LaunchKind::underfill;
    IntensityClass intensity = IntensityClass::signal;
    int trials = 0;
    double qber_mean = 0.0;
    double qber_sdom = 0.0;
    double gain_mean = 0.0;
    double gain_sdom = 0.0;
    double loss_db_mean = 0.0;
};

HistogramGrid build_histogram(const std::vector<DetectionRecord>& records,
                              const ProtocolParams& protocol, double bin_width_s);

// Circular offset (in symbols) that best aligns the histogram's gated energy
// with the expected per-symbol template; ties break toward the smallest offset.
std::size_t align_pattern(const HistogramGrid& hist, const SymbolPattern& pattern,
                          const ProtocolParams& protocol);

struct GateScore {
    std::uint64_t correct = 0;
    std::uint64_t incorrect = 0;
};

// Sums histogram counts inside each symbol's expected and complementary gates
// for the basis encoded in the pattern (single-basis acquisitions).
GateScore gate_and_score(const HistogramGrid& hist, const SymbolPattern& pattern,
                         std::size_t offset, const ProtocolParams& protocol);

// QBER and gain from gated counts; `mu` is the acquisition's mean photon
// number (0 selects the per-pulse click-probability convention for vacuum).
LinkObservables compute_observables(std::uint64_t correct, std::uint64_t incorrect,
                                    const ProtocolParams& protocol, double mu);

std::vector<TrialAggregate> aggregate_trials(const std::vector<LinkObservables>& observables);

// Gate geometry shared by scoring, alignment, and the acquisition simulation:
// slot centers sit at 1/4 and 3/4 of the symbol period.
double slot_center_s(const ProtocolParams& protocol, int slot);

} // namespace mmqkd
