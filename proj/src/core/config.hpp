#pragma once

#include "core/channel.hpp"
#include "core/domain.hpp"
#include "core/receiver.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace mmqkd {

enum class RunMode { sweep, stability, calibrate, analyze };
enum class AcquisitionMode { analytic, event };

std::string to_string(RunMode m);
RunMode run_mode_from_string(const std::string& s);
std::string to_string(AcquisitionMode m);
AcquisitionMode acquisition_from_string(const std::string& s);

// One run of the front end: the experiment selector, its sampling plan, and
// the full parameter sets of the link under test.  JSON round-trip is strict:
// unknown keys are rejected at every level so typos cannot silently fall back
// to defaults.
struct RunConfig {
    RunMode mode = RunMode::sweep;
    std::uint64_t seed = 42;
    std::vector<double> distances_km{1, 2, 3, 5, 7, 8, 10, 12, 15, 17};
    int trials = 5;
    std::vector<LaunchKind> launches{LaunchKind::underfill, LaunchKind::adapter};
    std::string out_dir = "out";
    AcquisitionMode acquisition = AcquisitionMode::analytic;
    std::uint64_t event_symbols = 10'000'000; // per-symbol mode acquisition length
    std::int64_t event_offset_symbols = -1;   // -1: drawn from the trial stream
    double stability_duration_s = 21600.0;
    double stability_step_s = 10.0;
    double stability_distance_km = 10.0;
    LaunchKind stability_launch = LaunchKind::underfill;
    std::string analyze_input;  // observables table consumed by the analyze mode
    bool optimize = true;       // grid-search p_z and the emission split per point

    ProtocolParams protocol{};
    ChannelConfig channel{};
    DetectorParams detector{};
    DriftState drift{};

    void validate() const;
};

// "both" expands to underfill + adapter (in that order).
std::vector<LaunchKind> launches_from_string(const std::string& s);
std::string to_string(const std::vector<LaunchKind>& launches);

RunConfig config_from_json(const nlohmann::json& j, bool validate = true);
RunConfig load_config(const std::filesystem::path& path);
nlohmann::ordered_json config_to_json(const RunConfig& c);
void save_config(const std::filesystem::path& path, const RunConfig& c);

} // namespace mmqkd
