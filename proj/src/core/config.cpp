#include "core/config.hpp"

#include <fstream>
#include <initializer_list>

namespace mmqkd {

using nlohmann::json;
using nlohmann::ordered_json;

std::string to_string(RunMode m) {
    switch (m) {
    case RunMode::sweep: return "sweep";
    case RunMode::stability: return "stability";
    case RunMode::calibrate: return "calibrate";
    case RunMode::analyze: return "analyze";
    }
    throw ConfigError("unknown run mode");
}

RunMode run_mode_from_string(const std::string& s) {
    if (s == "sweep") return RunMode::sweep;
    if (s == "stability") return RunMode::stability;
    if (s == "calibrate") return RunMode::calibrate;
    if (s == "analyze") return RunMode::analyze;
    throw ConfigError("unknown mode '" + s + "' (sweep|stability|calibrate|analyze)");
}

std::string to_string(AcquisitionMode m) {
    return m == AcquisitionMode::analytic ? "analytic" : "event";
}

AcquisitionMode acquisition_from_string(const std::string& s) {
    if (s == "analytic") return AcquisitionMode::analytic;
    if (s == "event") return AcquisitionMode::event;
    throw ConfigError("unknown acquisition mode '" + s + "' (analytic|event)");
}

std::vector<LaunchKind> launches_from_string(const std::string& s) {
    if (s == "both") return {LaunchKind::underfill, LaunchKind::adapter};
    return {launch_from_string(s)};
}

std::string to_string(const std::vector<LaunchKind>& launches) {
    if (launches.size() >= 2) return "both";
    if (launches.empty()) throw ConfigError("no launch kind selected");
    return to_string(launches.front());
}

void RunConfig::validate() const {
    if (trials < 1)
        throw ConfigError("config: trials must be >= 1");
    if (distances_km.empty())
        throw ConfigError("config: distances_km must not be empty");
    for (double d : distances_km)
        if (!(d > 0.0))
            throw ConfigError("config: distances must be positive");
    if (launches.empty())
        throw ConfigError("config: no launch kind selected");
    if (out_dir.empty())
        throw ConfigError("config: out_dir must not be empty");
    if (acquisition == AcquisitionMode::event) {
        if (event_symbols > 10'000'000)
            throw ConfigError("config: event acquisition is capped at 1e7 symbols; "
                              "use the analytic mode for longer runs");
        if (event_symbols < protocol.pattern_length)
            throw ConfigError("config: event_symbols must cover at least one pattern");
    }
    if (!(stability_duration_s > 0.0) || !(stability_step_s > 0.0))
        throw ConfigError("config: stability duration and step must be positive");
    if (stability_duration_s < stability_step_s)
        throw ConfigError("config: stability duration must cover at least one step");
    if (!(stability_distance_km > 0.0))
        throw ConfigError("config: stability_distance_km must be positive");
    if (mode == RunMode::analyze && analyze_input.empty())
        throw ConfigError("config: analyze mode needs analyze_input");
    protocol.validate();
    channel.validate();
    detector.validate();
    drift.validate();
}

namespace {

void check_keys(const json& j, const std::string& scope,
                std::initializer_list<const char*> allowed) {
    if (!j.is_object())
        throw ConfigError("config: " + (scope.empty() ? std::string("document") : scope) +
                          " must be a JSON object");
    for (const auto& item : j.items()) {
        bool known = false;
        for (const char* a : allowed)
            if (item.key() == a) {
                known = true;
                break;
            }
        if (!known)
            throw ConfigError("config: unknown key '" + scope + item.key() + "'");
    }
}

template <typename T>
void get_to(const json& j, const char* key, T& out, const std::string& scope) {
    if (!j.contains(key))
        return;
    try {
        j.at(key).get_to(out);
    } catch (const json::exception& e) {
        throw ConfigError("config: bad value for '" + scope + key + "': " + e.what());
    }
}

std::string get_string(const json& j, const char* key, const std::string& fallback,
                       const std::string& scope) {
    std::string s = fallback;
    get_to(j, key, s, scope);
    return s;
}

void parse_protocol(const json& j, ProtocolParams& p) {
    check_keys(j, "protocol.",
               {"clock_hz", "pattern_length", "acquisition_s", "basis_bias_pz",
                "intensity_probs", "gate_s", "slave_separation_s", "intensities"});
    get_to(j, "clock_hz", p.clock_hz, "protocol.");
    get_to(j, "pattern_length", p.pattern_length, "protocol.");
    get_to(j, "acquisition_s", p.acquisition_s, "protocol.");
    get_to(j, "basis_bias_pz", p.basis_bias_pz, "protocol.");
    get_to(j, "intensity_probs", p.intensity_probs, "protocol.");
    get_to(j, "gate_s", p.gate_s, "protocol.");
    get_to(j, "slave_separation_s", p.slave_separation_s, "protocol.");
    if (j.contains("intensities")) {
        const json& ji = j.at("intensities");
        check_keys(ji, "protocol.intensities.", {"signal", "decoy", "vacuum"});
        get_to(ji, "signal", p.intensities.signal, "protocol.intensities.");
        get_to(ji, "decoy", p.intensities.decoy, "protocol.intensities.");
        get_to(ji, "vacuum", p.intensities.vacuum, "protocol.intensities.");
    }
}

void parse_channel(const json& j, ChannelConfig& c) {
    check_keys(j, "channel.",
               {"length_km", "segments_km", "attenuation_db_per_km",
                "excess_attenuation_db_per_km", "group_excess_db_per_km", "connector_mean_db",
                "connector_std_db", "kappa_per_km", "tau_dmd_s_per_km", "phase_rate_rad_per_km",
                "adapter_suppression", "adapter_leak0", "adapter_insertion_db",
                "underfill_min_fraction", "underfill_max_fraction",
                "underfill_phase_scramble_rad", "base_excess_db", "recapture_fraction",
                "e_opt_x", "e_opt_z", "phase_error_coeff", "timing_error_coeff"});
    get_to(j, "length_km", c.length_km, "channel.");
    get_to(j, "segments_km", c.segments_km, "channel.");
    get_to(j, "attenuation_db_per_km", c.attenuation_db_per_km, "channel.");
    get_to(j, "excess_attenuation_db_per_km", c.excess_attenuation_db_per_km, "channel.");
    get_to(j, "group_excess_db_per_km", c.group_excess_db_per_km, "channel.");
    get_to(j, "connector_mean_db", c.connector_mean_db, "channel.");
    get_to(j, "connector_std_db", c.connector_std_db, "channel.");
    get_to(j, "kappa_per_km", c.kappa_per_km, "channel.");
    get_to(j, "tau_dmd_s_per_km", c.tau_dmd_s_per_km, "channel.");
    get_to(j, "phase_rate_rad_per_km", c.phase_rate_rad_per_km, "channel.");
    get_to(j, "adapter_suppression", c.adapter_suppression, "channel.");
    get_to(j, "adapter_leak0", c.adapter_leak0, "channel.");
    get_to(j, "adapter_insertion_db", c.adapter_insertion_db, "channel.");
    get_to(j, "underfill_min_fraction", c.underfill_min_fraction, "channel.");
    get_to(j, "underfill_max_fraction", c.underfill_max_fraction, "channel.");
    get_to(j, "underfill_phase_scramble_rad", c.underfill_phase_scramble_rad, "channel.");
    get_to(j, "base_excess_db", c.base_excess_db, "channel.");
    get_to(j, "recapture_fraction", c.recapture_fraction, "channel.");
    get_to(j, "e_opt_x", c.e_opt_x, "channel.");
    get_to(j, "e_opt_z", c.e_opt_z, "channel.");
    get_to(j, "phase_error_coeff", c.phase_error_coeff, "channel.");
    get_to(j, "timing_error_coeff", c.timing_error_coeff, "channel.");
}

void parse_detector(const json& j, DetectorParams& d) {
    check_keys(j, "detector.",
               {"efficiency", "dark_rate_hz", "receiver_attenuation_db", "timetag_resolution_s",
                "dead_time_s", "jitter_sigma_s", "amzi_insertion_db"});
    get_to(j, "efficiency", d.efficiency, "detector.");
    get_to(j, "dark_rate_hz", d.dark_rate_hz, "detector.");
    get_to(j, "receiver_attenuation_db", d.receiver_attenuation_db, "detector.");
    get_to(j, "timetag_resolution_s", d.timetag_resolution_s, "detector.");
    get_to(j, "dead_time_s", d.dead_time_s, "detector.");
    get_to(j, "jitter_sigma_s", d.jitter_sigma_s, "detector.");
    get_to(j, "amzi_insertion_db", d.amzi_insertion_db, "detector.");
}

void parse_drift(const json& j, DriftState& d) {
    check_keys(j, "drift.", {"period_s", "amplitude", "stochastic_amplitude", "stochastic_tau_s"});
    get_to(j, "period_s", d.period_s, "drift.");
    get_to(j, "amplitude", d.amplitude, "drift.");
    get_to(j, "stochastic_amplitude", d.stochastic_amplitude, "drift.");
    get_to(j, "stochastic_tau_s", d.stochastic_tau_s, "drift.");
}

} // namespace

RunConfig config_from_json(const json& j, bool validate) {
    check_keys(j, "",
               {"mode", "seed", "distances_km", "trials", "launch", "out_dir", "acquisition",
                "event_symbols", "event_offset_symbols", "stability_duration_s",
                "stability_step_s", "stability_distance_km", "stability_launch", "analyze_input",
                "optimize", "protocol", "channel", "detector", "drift"});
    RunConfig c;
    c.mode = run_mode_from_string(get_string(j, "mode", to_string(c.mode), ""));
    get_to(j, "seed", c.seed, "");
    get_to(j, "distances_km", c.distances_km, "");
    get_to(j, "trials", c.trials, "");
    c.launches = launches_from_string(get_string(j, "launch", to_string(c.launches), ""));
    get_to(j, "out_dir", c.out_dir, "");
    c.acquisition =
        acquisition_from_string(get_string(j, "acquisition", to_string(c.acquisition), ""));
    get_to(j, "event_symbols", c.event_symbols, "");
    get_to(j, "event_offset_symbols", c.event_offset_symbols, "");
    get_to(j, "stability_duration_s", c.stability_duration_s, "");
    get_to(j, "stability_step_s", c.stability_step_s, "");
    get_to(j, "stability_distance_km", c.stability_distance_km, "");
    c.stability_launch =
        launch_from_string(get_string(j, "stability_launch", to_string(c.stability_launch), ""));
    get_to(j, "analyze_input", c.analyze_input, "");
    get_to(j, "optimize", c.optimize, "");
    if (j.contains("protocol")) parse_protocol(j.at("protocol"), c.protocol);
    if (j.contains("channel")) parse_channel(j.at("channel"), c.channel);
    if (j.contains("detector")) parse_detector(j.at("detector"), c.detector);
    if (j.contains("drift")) parse_drift(j.at("drift"), c.drift);
    if (validate)
        c.validate();
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw ParseError(path.string() + ": cannot open");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

ordered_json config_to_json(const RunConfig& c) {
    ordered_json j;
    j["mode"] = to_string(c.mode);
    j["seed"] = c.seed;
    j["distances_km"] = c.distances_km;
    j["trials"] = c.trials;
    j["launch"] = to_string(c.launches);
    j["out_dir"] = c.out_dir;
    j["acquisition"] = to_string(c.acquisition);
    j["event_symbols"] = c.event_symbols;
    j["event_offset_symbols"] = c.event_offset_symbols;
    j["stability_duration_s"] = c.stability_duration_s;
    j["stability_step_s"] = c.stability_step_s;
    j["stability_distance_km"] = c.stability_distance_km;
    j["stability_launch"] = to_string(c.stability_launch);
    j["analyze_input"] = c.analyze_input;
    j["optimize"] = c.optimize;
    j["protocol"] = {{"clock_hz", c.protocol.clock_hz},
                     {"pattern_length", c.protocol.pattern_length},
                     {"acquisition_s", c.protocol.acquisition_s},
                     {"basis_bias_pz", c.protocol.basis_bias_pz},
                     {"intensity_probs", c.protocol.intensity_probs},
                     {"gate_s", c.protocol.gate_s},
                     {"slave_separation_s", c.protocol.slave_separation_s},
                     {"intensities",
                      {{"signal", c.protocol.intensities.signal},
                       {"decoy", c.protocol.intensities.decoy},
                       {"vacuum", c.protocol.intensities.vacuum}}}};
    j["channel"] = {{"length_km", c.channel.length_km},
                    {"segments_km", c.channel.segments_km},
                    {"attenuation_db_per_km", c.channel.attenuation_db_per_km},
                    {"excess_attenuation_db_per_km", c.channel.excess_attenuation_db_per_km},
                    {"group_excess_db_per_km", c.channel.group_excess_db_per_km},
                    {"connector_mean_db", c.channel.connector_mean_db},
                    {"connector_std_db", c.channel.connector_std_db},
                    {"kappa_per_km", c.channel.kappa_per_km},
                    {"tau_dmd_s_per_km", c.channel.tau_dmd_s_per_km},
                    {"phase_rate_rad_per_km", c.channel.phase_rate_rad_per_km},
                    {"adapter_suppression", c.channel.adapter_suppression},
                    {"adapter_leak0", c.channel.adapter_leak0},
                    {"adapter_insertion_db", c.channel.adapter_insertion_db},
                    {"underfill_min_fraction", c.channel.underfill_min_fraction},
                    {"underfill_max_fraction", c.channel.underfill_max_fraction},
                    {"underfill_phase_scramble_rad", c.channel.underfill_phase_scramble_rad},
                    {"base_excess_db", c.channel.base_excess_db},
                    {"recapture_fraction", c.channel.recapture_fraction},
                    {"e_opt_x", c.channel.e_opt_x},
                    {"e_opt_z", c.channel.e_opt_z},
                    {"phase_error_coeff", c.channel.phase_error_coeff},
                    {"timing_error_coeff", c.channel.timing_error_coeff}};
    j["detector"] = {{"efficiency", c.detector.efficiency},
                     {"dark_rate_hz", c.detector.dark_rate_hz},
                     {"receiver_attenuation_db", c.detector.receiver_attenuation_db},
                     {"timetag_resolution_s", c.detector.timetag_resolution_s},
                     {"dead_time_s", c.detector.dead_time_s},
                     {"jitter_sigma_s", c.detector.jitter_sigma_s},
                     {"amzi_insertion_db", c.detector.amzi_insertion_db}};
    j["drift"] = {{"period_s", c.drift.period_s},
                  {"amplitude", c.drift.amplitude},
                  {"stochastic_amplitude", c.drift.stochastic_amplitude},
                  {"stochastic_tau_s", c.drift.stochastic_tau_s}};
    return j;
}

void save_config(const std::filesystem::path& path, const RunConfig& c) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ConfigError("cannot open for writing: " + path.string());
    out << config_to_json(c).dump(2) << '\n';
    if (!out)
        throw ConfigError("write failed: " + path.string());
}

} // namespace mmqkd
