#pragma once

#include "core/domain.hpp"
#include "core/rng.hpp"

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace mmqkd {

inline constexpr std::size_t kModeGroups = 8;

enum class LaunchKind { underfill, adapter };

std::string to_string(LaunchKind kind);
LaunchKind launch_from_string(std::string_view s);

// Power-flow description of the field at a fiber cross-section: per-group power
// fractions (deficit from 1 = accumulated loss), accumulated differential group
// delay, and an RMS proxy for the relative phase wander of each group.
struct ModePowerState {
    std::array<double, kModeGroups> fraction{};
    std::array<double, kModeGroups> delay_s{};
    std::array<double, kModeGroups> phase_rms_rad{};

    double total_power() const;
    double higher_order_power() const;
    void validate() const;
};

struct ChannelConfig {
    double length_km = 10.0;
    std::vector<double> segments_km{}; // empty: standard spool decomposition
    double attenuation_db_per_km = 0.3;
    double excess_attenuation_db_per_km = 0.05; // cabling/splice excess past nominal
    double group_excess_db_per_km = 0.02;       // extra loss per mode-group step
    double connector_mean_db = 0.10;            // per mated junction, drawn per trial
    double connector_std_db = 0.05;
    double kappa_per_km = 0.0040169761034326854;         // nearest-neighbor group coupling rate
    double tau_dmd_s_per_km = 50e-12;    // differential delay per group step
    double phase_rate_rad_per_km = 1.0;  // phase-spread growth per group step
    LaunchKind launch = LaunchKind::underfill;
    double adapter_suppression = 0.8;    // s_a: higher-order suppression quality
    double adapter_leak0 = 0.05;         // residual higher-order leak at s_a = 0
    double adapter_insertion_db = 0.5;   // per adapter; one fitted at each end
    double underfill_min_fraction = 0.75;
    double underfill_max_fraction = 0.95;
    double underfill_phase_scramble_rad = 3.0; // splice-plane phase kick at launch
    double base_excess_db = 17.097504778574201; // static rig excess, not drift-modulated (calibrated)
    double recapture_fraction = 0.1;     // group-2 power recoverable into the SMF
    double e_opt_x = 0.01;               // interferometric visibility floor
    double e_opt_z = 0.001;              // time-bin intrinsic error floor
    double phase_error_coeff = 4.1418795176069452;   // scales scrambled higher-order light (calibrated)
    double timing_error_coeff = 0.29561051734328753; // scales late higher-order light (calibrated)

    std::vector<double> segments() const;
    std::size_t junction_count() const;
    void validate() const;
};

// Slow environmental modulation shared by the coupling rate and the mated
// connector losses: a periodic component plus mean-reverting random wander,
// combined in the exponent so the multiplier stays positive.
struct DriftState {
    double time_s = 0.0;
    double period_s = 600.0;
    double amplitude = 0.84336172516137864;            // log-amplitude of the periodic term (calibrated)
    double stochastic_amplitude = 0.42168086258068932; // stationary std of the wander term (amplitude/2)
    double stochastic_tau_s = 120.0;
    double wander = 0.0;

    double modulation() const;
    void validate() const;
};

struct ErrorContributions {
    double phase = 0.0;
    double timing = 0.0;
};

ModePowerState launch(LaunchKind kind, const ChannelConfig& cfg, const SeededRng& rng);

ModePowerState propagate(const ModePowerState& in, const ChannelConfig& cfg,
                         const DriftState& drift, const SeededRng& trial_rng);

double link_transmittance(const ModePowerState& out, double receiver_attenuation_db,
                          double detector_efficiency, double extra_excess_db = 0.0,
                          double recapture_fraction = 0.0);

ErrorContributions error_contributions(const ModePowerState& out, const ChannelConfig& cfg,
                                       const ProtocolParams& protocol);

DriftState advance_drift(const DriftState& d, double dt, SeededRng& rng);

} // namespace mmqkd
