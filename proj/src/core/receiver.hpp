#pragma once

#include "core/domain.hpp"
#include "core/rng.hpp"
#include "core/transmitter.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mmqkd {

struct DetectorParams {
    double efficiency = 0.5;
    double dark_rate_hz = 10.0;
    double receiver_attenuation_db = 3.0; // balancing attenuation on the Z arm
    double timetag_resolution_s = 16e-12;
    double dead_time_s = 50e-9;
    double jitter_sigma_s = 30e-12;
    double amzi_insertion_db = 5.1; // interferometer + monitor-tap excess on the X arm
    void validate() const;
};

struct DetectionRecord {
    double timetag_s = 0.0;     // quantized to the timetag resolution
    std::int64_t symbol = -1;   // originating symbol index; -1 marks a dark count
};

// Interferometer slots at the monitored output: the leading and trailing
// non-interfering satellites and the central interfered slot.
enum class AmziSlot { early = 0, center = 1, late = 2 };

struct AmziOutcome {
    int port = 0; // 0 = monitored detector, 1 = unmonitored complement
    AmziSlot slot = AmziSlot::center;
};

// Routes one detected photon of an X-basis symbol through the interferometer:
// half the energy interferes in the central slot (correct port w.p.
// 1 - phase_error_prob), the rest splits evenly into the satellite slots which
// carry no phase information and divide equally between the ports.
AmziOutcome amzi_outcome(const EmittedSymbol& symbol, double phase_error_prob, SeededRng& rng);

// Where a Z-basis photon lands: the assigned time bin, or the complementary
// one with probability timing_error_prob.
int timing_misplacement(const EmittedSymbol& symbol, double timing_error_prob, SeededRng& rng);

// Click probability for one gate: arriving mean photons thinned by the
// detector efficiency, plus uniform dark counts over the gate-open window.
double gate_click_probability(double arriving_mean, const DetectorParams& params, double gate_s);

// Samples one gate: click or no click; on click the timetag is the slot center
// plus Gaussian jitter, quantized to the timetag resolution.
std::optional<DetectionRecord> detect(double arriving_mean, const DetectorParams& params,
                                      double gate_s, double slot_center_s,
                                      std::int64_t symbol, SeededRng& rng);

double quantize_timetag(double t_s, double resolution_s);

// Drops any record closer than the dead time to the previously kept record;
// input must be sorted by timetag.
std::vector<DetectionRecord> dead_time_filter(std::vector<DetectionRecord> records,
                                              double dead_time_s);

// Raw timetag dumps: binary is little-endian 64-bit picosecond integers, one
// per record; CSV is one picosecond integer per line under a header.
void write_timetags_binary(const std::string& path, const std::vector<DetectionRecord>& records);
void write_timetags_csv(const std::string& path, const std::vector<DetectionRecord>& records);
std::vector<double> read_timetags_binary(const std::string& path);
std::vector<double> read_timetags_csv(const std::string& path);

} // namespace mmqkd
