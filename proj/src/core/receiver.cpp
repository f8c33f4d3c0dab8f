#include "core/receiver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace mmqkd {

void DetectorParams::validate() const {
    if (efficiency < 0.0 || efficiency > 1.0) throw ConfigError("detector efficiency must lie in [0, 1]");
    if (dark_rate_hz < 0.0) throw ConfigError("dark count rate must be non-negative");
    if (receiver_attenuation_db < 0.0) throw ConfigError("receiver attenuation must be non-negative");
    if (timetag_resolution_s <= 0.0) throw ConfigError("timetag resolution must be positive");
    if (dead_time_s < 0.0) throw ConfigError("dead time must be non-negative");
    if (jitter_sigma_s < 0.0) throw ConfigError("timing jitter must be non-negative");
    if (amzi_insertion_db < 0.0) throw ConfigError("interferometer insertion loss must be non-negative");
}

AmziOutcome amzi_outcome(const EmittedSymbol& symbol, double phase_error_prob, SeededRng& rng) {
    if (symbol.basis != Basis::X)
        throw std::logic_error("amzi_outcome requires an X-basis symbol");
    if (phase_error_prob < 0.0 || phase_error_prob > 1.0)
        throw ConfigError("phase error probability must lie in [0, 1]");

    AmziOutcome out;
    const double u = rng.uniform01();
    if (u < 0.25) {
        out.slot = AmziSlot::early;
        out.port = rng.uniform01() < 0.5 ? 0 : 1;
    } else if (u < 0.5) {
        out.slot = AmziSlot::late;
        out.port = rng.uniform01() < 0.5 ? 0 : 1;
    } else {
        out.slot = AmziSlot::center;
        const int correct_port = symbol.bit; // bit 0 interferes toward the monitored arm
        out.port = (rng.uniform01() < phase_error_prob) ? 1 - correct_port : correct_port;
    }
    return out;
}

int timing_misplacement(const EmittedSymbol& symbol, double timing_error_prob, SeededRng& rng) {
    if (symbol.basis != Basis::Z)
        throw std::logic_error("timing_misplacement requires a Z-basis symbol");
    if (timing_error_prob < 0.0 || timing_error_prob > 1.0)
        throw ConfigError("timing error probability must lie in [0, 1]");
    const bool flip = rng.uniform01() < timing_error_prob;
    return flip ? 1 - symbol.slot : symbol.slot;
}

double gate_click_probability(double arriving_mean, const DetectorParams& params, double gate_s) {
    if (arriving_mean < 0.0) throw ConfigError("arriving mean photons must be non-negative");
    if (gate_s < 0.0) throw ConfigError("gate width must be non-negative");
    params.validate();
    const double mean = params.efficiency * arriving_mean + params.dark_rate_hz * gate_s;
    return 1.0 - std::exp(-mean);
}

std::optional<DetectionRecord> detect(double arriving_mean, const DetectorParams& params,
                                      double gate_s, double slot_center_s,
                                      std::int64_t symbol, SeededRng& rng) {
    const double p = gate_click_probability(arriving_mean, params, gate_s);
    if (rng.uniform01() >= p) return std::nullopt;
    DetectionRecord rec;
    rec.symbol = symbol;
    const double jitter = params.jitter_sigma_s > 0.0 ? rng.normal(0.0, params.jitter_sigma_s) : 0.0;
    rec.timetag_s = quantize_timetag(slot_center_s + jitter, params.timetag_resolution_s);
    return rec;
}

double quantize_timetag(double t_s, double resolution_s) {
    if (resolution_s <= 0.0) throw ConfigError("timetag resolution must be positive");
    return std::floor(t_s / resolution_s) * resolution_s;
}

std::vector<DetectionRecord> dead_time_filter(std::vector<DetectionRecord> records,
                                              double dead_time_s) {
    if (dead_time_s < 0.0) throw ConfigError("dead time must be non-negative");
    std::vector<DetectionRecord> kept;
    kept.reserve(records.size());
    double last = -1e300;
    for (const auto& r : records) {
        if (r.timetag_s < last) throw ConfigError("dead-time filter requires time-sorted records");
        if (kept.empty() || r.timetag_s - last >= dead_time_s) {
            kept.push_back(r);
            last = r.timetag_s;
        }
    }
    return kept;
}

namespace {

std::int64_t to_picoseconds(double t_s) {
    return static_cast<std::int64_t>(std::llround(t_s * 1e12));
}

} // namespace

void write_timetags_binary(const std::string& path, const std::vector<DetectionRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    for (const auto& r : records) {
        const std::int64_t ps = to_picoseconds(r.timetag_s);
        unsigned char bytes[8];
        for (int i = 0; i < 8; ++i)
            bytes[i] = static_cast<unsigned char>((static_cast<std::uint64_t>(ps) >> (8 * i)) & 0xff);
        out.write(reinterpret_cast<const char*>(bytes), 8);
    }
}

void write_timetags_csv(const std::string& path, const std::vector<DetectionRecord>& records) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "timetag_ps\n";
    for (const auto& r : records) out << to_picoseconds(r.timetag_s) << "\n";
}

std::vector<double> read_timetags_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::vector<double> out;
    unsigned char bytes[8];
    while (in.read(reinterpret_cast<char*>(bytes), 8)) {
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
        out.push_back(static_cast<double>(static_cast<std::int64_t>(v)) * 1e-12);
    }
    if (in.gcount() != 0) throw std::runtime_error("truncated timetag record in " + path);
    return out;
}

std::vector<double> read_timetags_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::vector<double> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (lineno == 1) {
            if (line != "timetag_ps")
                throw std::runtime_error(path + ":1: expected header 'timetag_ps'");
            continue;
        }
        if (line.empty()) continue;
        std::size_t pos = 0;
        long long ps = 0;
        try {
            ps = std::stoll(line, &pos);
        } catch (const std::exception&) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": not an integer: " + line);
        }
        if (pos != line.size())
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": trailing characters: " + line);
        out.push_back(static_cast<double>(ps) * 1e-12);
    }
    return out;
}

} // namespace mmqkd
