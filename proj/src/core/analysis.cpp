#include "core/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace mmqkd {

namespace {

// Histogram bins covered by the scoring gate of one slot within one symbol.
struct GateBins {
    std::size_t begin = 0;
    std::size_t end = 0; // half-open
};

std::size_t bins_per_symbol(const ProtocolParams& protocol, double bin_width_s) {
    const double ratio = protocol.symbol_period_s() / bin_width_s;
    const double rounded = std::round(ratio);
    if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-6 * ratio)
        throw ConfigError("bin width must divide the symbol period");
    return static_cast<std::size_t>(rounded);
}

GateBins gate_bins(const ProtocolParams& protocol, double bin_width_s, int slot) {
    const double center = slot_center_s(protocol, slot);
    const double lo = center - 0.5 * protocol.gate_s;
    const auto begin = static_cast<std::size_t>(std::llround(lo / bin_width_s));
    const auto width = static_cast<std::size_t>(
        std::max<long long>(1, std::llround(protocol.gate_s / bin_width_s)));
    return {begin, begin + width};
}

// Gated counts for each (symbol position, slot) of the folded histogram.
std::vector<std::array<std::uint64_t, 2>> gated_energy(const HistogramGrid& hist,
                                                       const ProtocolParams& protocol) {
    const std::size_t bps = bins_per_symbol(protocol, hist.bin_width_s);
    if (hist.counts.size() != bps * protocol.pattern_length)
        throw ConfigError("histogram does not cover one pattern period");
    const GateBins g0 = gate_bins(protocol, hist.bin_width_s, 0);
    const GateBins g1 = gate_bins(protocol, hist.bin_width_s, 1);
    std::vector<std::array<std::uint64_t, 2>> out(protocol.pattern_length, {0, 0});
    for (std::size_t j = 0; j < protocol.pattern_length; ++j) {
        const std::size_t base = j * bps;
        std::uint64_t a = 0, b = 0;
        for (std::size_t k = g0.begin; k < g0.end; ++k) a += hist.counts[base + k];
        for (std::size_t k = g1.begin; k < g1.end; ++k) b += hist.counts[base + k];
        out[j] = {a, b};
    }
    return out;
}

// Expected scoring slot of a sent symbol, or -1 when the monitored output
// should stay dark (X-basis bit 1 interferes toward the complementary port).
int expected_slot(const PatternSymbol& s) {
    if (s.basis == Basis::X) return s.bit == 0 ? 1 : -1;
    return s.bit;
}

} // namespace

std::uint64_t HistogramGrid::total() const {
    std::uint64_t sum = 0;
    for (auto c : counts) sum += c;
    return sum;
}

double slot_center_s(const ProtocolParams& protocol, int slot) {
    if (slot != 0 && slot != 1) throw ConfigError("slot must be 0 (early) or 1 (late)");
    const double first = 0.5 * (protocol.symbol_period_s() - protocol.slave_separation_s);
    return first + (slot == 1 ? protocol.slave_separation_s : 0.0);
}

HistogramGrid build_histogram(const std::vector<DetectionRecord>& records,
                              const ProtocolParams& protocol, double bin_width_s) {
    protocol.validate();
    if (bin_width_s <= 0.0) throw ConfigError("bin width must be positive");
    const std::size_t bps = bins_per_symbol(protocol, bin_width_s);
    const double period = protocol.pattern_period_s();

    HistogramGrid hist;
    hist.bin_width_s = bin_width_s;
    hist.acquisition_s = protocol.acquisition_s;
    hist.counts.assign(bps * protocol.pattern_length, 0);
    const auto nbins = hist.counts.size();

    for (const auto& r : records) {
        double folded = std::fmod(r.timetag_s, period);
        if (folded < 0.0) folded += period;
        auto bin = static_cast<std::size_t>(folded / bin_width_s);
        if (bin >= nbins) bin = nbins - 1; // folded == period within rounding
        ++hist.counts[bin];
    }
    return hist;
}

std::size_t align_pattern(const HistogramGrid& hist, const SymbolPattern& pattern,
                          const ProtocolParams& protocol) {
    if (hist.total() == 0) throw NoSignalError("cannot align an empty histogram");
    if (pattern.size() != protocol.pattern_length)
        throw ConfigError("pattern length does not match the protocol");

    const auto gated = gated_energy(hist, protocol);
    const std::size_t n = pattern.size();

    std::uint64_t best_score = 0;
    std::size_t best_offset = 0;
    for (std::size_t k = 0; k < n; ++k) {
        std::uint64_t score = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const int slot = expected_slot(pattern.at(i));
            if (slot >= 0) score += gated[(i + k) % n][static_cast<std::size_t>(slot)];
        }
        if (score > best_score) {
            best_score = score;
            best_offset = k;
        }
    }
    return best_offset;
}

GateScore gate_and_score(const HistogramGrid& hist, const SymbolPattern& pattern,
                         std::size_t offset, const ProtocolParams& protocol) {
    if (pattern.size() != protocol.pattern_length)
        throw ConfigError("pattern length does not match the protocol");
    if (offset >= pattern.size()) throw ConfigError("offset must be smaller than the pattern");

    const auto gated = gated_energy(hist, protocol);
    const std::size_t n = pattern.size();
    GateScore score;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& g = gated[(i + offset) % n];
        const PatternSymbol& s = pattern.at(i);
        if (s.basis == Basis::X) {
            // Single monitored interferometer output: the central gate carries
            // the signal for bit 0 and only leakage for bit 1.
            if (s.bit == 0)
                score.correct += g[1];
            else
                score.incorrect += g[1];
        } else {
            score.correct += g[s.bit];
            score.incorrect += g[1 - s.bit];
        }
    }
    return score;
}

LinkObservables compute_observables(std::uint64_t correct, std::uint64_t incorrect,
                                    const ProtocolParams& protocol, double mu) {
    protocol.validate();
    if (mu < 0.0) throw ConfigError("mean photon number must be non-negative");
    const std::uint64_t total = correct + incorrect;
    if (total == 0) throw NoSignalError("no gated counts in acquisition");

    LinkObservables obs;
    obs.qber = static_cast<double>(incorrect) / static_cast<double>(total);
    const double sent = (mu > 0.0 ? mu : 1.0) * protocol.clock_hz * protocol.acquisition_s;
    obs.gain = static_cast<double>(total) / sent;
    return obs;
}

std::vector<TrialAggregate> aggregate_trials(const std::vector<LinkObservables>& observables) {
    std::vector<TrialAggregate> cells;
    std::vector<std::vector<const LinkObservables*>> members;

    auto key_of = [](const LinkObservables& o) {
        return std::tuple(o.distance_km, o.basis, o.launch, o.intensity);
    };
    for (const auto& o : observables) {
        std::size_t idx = cells.size();
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (std::tuple(cells[i].distance_km, cells[i].basis, cells[i].launch,
                           cells[i].intensity) == key_of(o)) {
                idx = i;
                break;
            }
        }
        if (idx == cells.size()) {
            TrialAggregate cell;
            cell.distance_km = o.distance_km;
            cell.basis = o.basis;
            cell.launch = o.launch;
            cell.intensity = o.intensity;
            cells.push_back(cell);
            members.emplace_back();
        }
        members[idx].push_back(&o);
    }

    auto mean_sdom = [](const std::vector<const LinkObservables*>& xs, auto field) {
        double mean = 0.0;
        for (const auto* x : xs) mean += field(*x);
        mean /= static_cast<double>(xs.size());
        double ss = 0.0;
        for (const auto* x : xs) {
            const double d = field(*x) - mean;
            ss += d * d;
        }
        const auto n = static_cast<double>(xs.size());
        const double sdom = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
        return std::pair(mean, sdom);
    };

    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (members[i].size() < 2)
            throw InsufficientDataError("need at least 2 trials per cell to aggregate");
        cells[i].trials = static_cast<int>(members[i].size());
        auto [qm, qs] = mean_sdom(members[i], [](const LinkObservables& o) { return o.qber; });
        auto [gm, gs] = mean_sdom(members[i], [](const LinkObservables& o) { return o.gain; });
        auto [lm, ls] = mean_sdom(members[i], [](const LinkObservables& o) { return o.loss_db; });
        (void)ls;
        cells[i].qber_mean = qm;
        cells[i].qber_sdom = qs;
        cells[i].gain_mean = gm;
        cells[i].gain_sdom = gs;
        cells[i].loss_db_mean = lm;
    }
    return cells;
}

} // namespace mmqkd
