#include "core/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mmqkd {

namespace {

constexpr double kSubstepKm = 1.0;

double db_factor(double db) { return std::pow(10.0, -db / 10.0); }

// Eigen-decomposition of the path-graph Laplacian on kModeGroups nodes.
// Eigenvalues 2 - 2 cos(k pi / n); eigenvectors are the DCT-II basis, so the
// coupling semigroup can be applied exactly for any step length.
struct CouplingBasis {
    std::array<double, kModeGroups> eigenvalue{};
    std::array<std::array<double, kModeGroups>, kModeGroups> vec{}; // vec[k][j]

    CouplingBasis() {
        const auto n = static_cast<double>(kModeGroups);
        for (std::size_t k = 0; k < kModeGroups; ++k) {
            eigenvalue[k] = 2.0 - 2.0 * std::cos(std::numbers::pi * static_cast<double>(k) / n);
            const double norm = (k == 0) ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
            for (std::size_t j = 0; j < kModeGroups; ++j) {
                vec[k][j] = norm * std::cos(std::numbers::pi * static_cast<double>(k) *
                                            (2.0 * static_cast<double>(j) + 1.0) / (2.0 * n));
            }
        }
    }
};

const CouplingBasis& coupling_basis() {
    static const CouplingBasis basis;
    return basis;
}

void apply_coupling(std::array<double, kModeGroups>& p, double kappa_times_length) {
    if (kappa_times_length == 0.0) return;
    const auto& basis = coupling_basis();
    std::array<double, kModeGroups> coeff{};
    for (std::size_t k = 0; k < kModeGroups; ++k) {
        double c = 0.0;
        for (std::size_t j = 0; j < kModeGroups; ++j) c += basis.vec[k][j] * p[j];
        coeff[k] = c * std::exp(-kappa_times_length * basis.eigenvalue[k]);
    }
    for (std::size_t j = 0; j < kModeGroups; ++j) {
        double v = 0.0;
        for (std::size_t k = 0; k < kModeGroups; ++k) v += coeff[k] * basis.vec[k][j];
        p[j] = std::max(v, 0.0);
    }
}

// Phase-to-error conversion: fully scrambled relative phase drives the
// interference error of the affected light to 1/2.
double scramble_weight(double sigma_rad) {
    return 0.5 * (1.0 - std::exp(-0.5 * sigma_rad * sigma_rad));
}

double clamp_error(double e) { return std::clamp(e, 0.0, 0.5); }

} // namespace

std::string to_string(LaunchKind kind) {
    return kind == LaunchKind::underfill ? "underfill" : "adapter";
}

LaunchKind launch_from_string(std::string_view s) {
    if (s == "underfill") return LaunchKind::underfill;
    if (s == "adapter") return LaunchKind::adapter;
    throw ConfigError("unknown launch kind: " + std::string(s));
}

double ModePowerState::total_power() const {
    double sum = 0.0;
    for (double f : fraction) sum += f;
    return sum;
}

double ModePowerState::higher_order_power() const {
    double sum = 0.0;
    for (std::size_t m = 1; m < kModeGroups; ++m) sum += fraction[m];
    return sum;
}

void ModePowerState::validate() const {
    for (double f : fraction)
        if (f < 0.0 || !std::isfinite(f)) throw ConfigError("mode power fractions must be non-negative");
    if (total_power() > 1.0 + 1e-9) throw ConfigError("mode power fractions must not exceed unity");
}

std::vector<double> ChannelConfig::segments() const {
    if (!segments_km.empty()) return segments_km;
    std::vector<double> out;
    double remaining = length_km;
    for (double spool : {10.0, 5.0, 2.0, 1.0}) {
        while (remaining >= spool - 1e-9) {
            out.push_back(spool);
            remaining -= spool;
        }
    }
    if (remaining > 1e-9) out.push_back(remaining); // short patch makes up the rest
    return out;
}

std::size_t ChannelConfig::junction_count() const { return segments().size() + 1; }

void ChannelConfig::validate() const {
    if (length_km < 0.0) throw ConfigError("fiber length must be non-negative");
    for (double s : segments_km)
        if (s <= 0.0) throw ConfigError("fiber segment lengths must be positive");
    if (!segments_km.empty()) {
        double sum = 0.0;
        for (double s : segments_km) sum += s;
        if (std::abs(sum - length_km) > 1e-6)
            throw ConfigError("segment lengths must sum to the total length");
    }
    if (attenuation_db_per_km < 0.0 || excess_attenuation_db_per_km < 0.0 ||
        group_excess_db_per_km < 0.0)
        throw ConfigError("attenuation coefficients must be non-negative");
    if (connector_mean_db < 0.0 || connector_std_db < 0.0)
        throw ConfigError("connector loss statistics must be non-negative");
    if (kappa_per_km < 0.0) throw ConfigError("coupling rate must be non-negative");
    if (tau_dmd_s_per_km < 0.0) throw ConfigError("differential delay must be non-negative");
    if (phase_rate_rad_per_km < 0.0) throw ConfigError("phase spread rate must be non-negative");
    if (adapter_suppression < 0.0 || adapter_suppression > 1.0)
        throw ConfigError("adapter suppression must lie in [0, 1]");
    if (adapter_leak0 < 0.0 || adapter_leak0 > 0.5) throw ConfigError("adapter leak must lie in [0, 0.5]");
    if (adapter_insertion_db < 0.0) throw ConfigError("adapter insertion loss must be non-negative");
    if (!(underfill_min_fraction > 0.0) || underfill_max_fraction > 1.0 ||
        underfill_min_fraction > underfill_max_fraction)
        throw ConfigError("underfill fraction band must satisfy 0 < min <= max <= 1");
    if (base_excess_db < 0.0) throw ConfigError("base excess loss must be non-negative");
    if (recapture_fraction < 0.0 || recapture_fraction > 1.0)
        throw ConfigError("recapture fraction must lie in [0, 1]");
    if (e_opt_x < 0.0 || e_opt_x > 0.5 || e_opt_z < 0.0 || e_opt_z > 0.5)
        throw ConfigError("intrinsic error floors must lie in [0, 0.5]");
    if (phase_error_coeff < 0.0 || timing_error_coeff < 0.0)
        throw ConfigError("error coefficients must be non-negative");
}

double DriftState::modulation() const {
    return std::exp(amplitude * std::sin(2.0 * std::numbers::pi * time_s / period_s) + wander);
}

void DriftState::validate() const {
    if (period_s <= 0.0) throw ConfigError("drift period must be positive");
    if (amplitude < 0.0 || stochastic_amplitude < 0.0)
        throw ConfigError("drift amplitudes must be non-negative");
    if (stochastic_tau_s <= 0.0) throw ConfigError("drift correlation time must be positive");
}

ModePowerState launch(LaunchKind kind, const ChannelConfig& cfg, const SeededRng& rng) {
    cfg.validate();
    ModePowerState state;
    if (kind == LaunchKind::adapter) {
        const double leak = (1.0 - cfg.adapter_suppression) * cfg.adapter_leak0;
        state.fraction[0] = 1.0 - leak;
        state.fraction[1] = leak * (2.0 / 3.0);
        state.fraction[2] = leak * (1.0 / 3.0);
    } else {
        SeededRng draw = rng.stream("launch");
        const double f1 = draw.uniform(cfg.underfill_min_fraction, cfg.underfill_max_fraction);
        const double rest = 1.0 - f1;
        state.fraction[0] = f1;
        state.fraction[1] = rest * 0.6;
        state.fraction[2] = rest * 0.3;
        state.fraction[3] = rest * 0.1;
        for (std::size_t m = 1; m < kModeGroups; ++m)
            state.phase_rms_rad[m] = cfg.underfill_phase_scramble_rad;
    }
    return state;
}

ModePowerState propagate(const ModePowerState& in, const ChannelConfig& cfg,
                         const DriftState& drift, const SeededRng& trial_rng) {
    in.validate();
    cfg.validate();
    drift.validate();

    const auto segs = cfg.segments();
    if (segs.empty()) return in;

    const double g = drift.modulation();
    const double kappa = cfg.kappa_per_km * g;

    // Junction losses are a property of the assembled link: one draw per mated
    // junction per trial, reused across every acquisition of that trial.
    SeededRng conn = trial_rng.stream("connectors");
    std::vector<double> junction_db(segs.size() + 1);
    for (std::size_t j = 0; j < junction_db.size(); ++j) {
        SeededRng jr = conn.substream(j);
        junction_db[j] = std::max(0.0, jr.normal(cfg.connector_mean_db, cfg.connector_std_db));
    }

    ModePowerState state = in;
    auto scale_all = [&state](double factor) {
        for (double& f : state.fraction) f *= factor;
    };

    scale_all(db_factor(junction_db[0] * g));
    if (cfg.launch == LaunchKind::adapter) scale_all(db_factor(cfg.adapter_insertion_db));

    for (std::size_t i = 0; i < segs.size(); ++i) {
        const double len = segs[i];
        scale_all(db_factor((cfg.attenuation_db_per_km + cfg.excess_attenuation_db_per_km) * len));

        const int nsub = std::max(1, static_cast<int>(std::ceil(len / kSubstepKm)));
        const double dl = len / nsub;
        for (int s = 0; s < nsub; ++s) {
            if (cfg.group_excess_db_per_km > 0.0) {
                for (std::size_t m = 1; m < kModeGroups; ++m)
                    state.fraction[m] *=
                        db_factor(cfg.group_excess_db_per_km * static_cast<double>(m) * dl);
            }
            apply_coupling(state.fraction, kappa * dl);
        }

        for (std::size_t m = 1; m < kModeGroups; ++m) {
            state.delay_s[m] += static_cast<double>(m) * cfg.tau_dmd_s_per_km * len;
            state.phase_rms_rad[m] += static_cast<double>(m) * cfg.phase_rate_rad_per_km * len;
        }

        scale_all(db_factor(junction_db[i + 1] * g));
    }

    if (cfg.launch == LaunchKind::adapter) scale_all(db_factor(cfg.adapter_insertion_db));
    return state;
}

double link_transmittance(const ModePowerState& out, double receiver_attenuation_db,
                          double detector_efficiency, double extra_excess_db,
                          double recapture_fraction) {
    if (receiver_attenuation_db < 0.0 || extra_excess_db < 0.0)
        throw ConfigError("loss terms must be non-negative");
    if (detector_efficiency < 0.0 || detector_efficiency > 1.0)
        throw ConfigError("detector efficiency must lie in [0, 1]");
    if (recapture_fraction < 0.0 || recapture_fraction > 1.0)
        throw ConfigError("recapture fraction must lie in [0, 1]");
    const double collected = out.fraction[0] + recapture_fraction * out.fraction[1];
    return collected * db_factor(receiver_attenuation_db) * db_factor(extra_excess_db) *
           detector_efficiency;
}

ErrorContributions error_contributions(const ModePowerState& out, const ChannelConfig& cfg,
                                       const ProtocolParams& protocol) {
    cfg.validate();
    protocol.validate();
    const double collected = out.fraction[0] + cfg.recapture_fraction * out.fraction[1];
    ErrorContributions e;
    if (collected <= 0.0) {
        e.phase = clamp_error(cfg.e_opt_x);
        return e;
    }
    const double ho_detected = cfg.recapture_fraction * out.fraction[1];
    const double w = scramble_weight(out.phase_rms_rad[1]);
    e.phase = clamp_error(cfg.e_opt_x + cfg.phase_error_coeff * ho_detected * w / collected);

    const double late = (out.delay_s[1] > 0.5 * protocol.gate_s) ? ho_detected : 0.0;
    e.timing = clamp_error(cfg.timing_error_coeff * late / collected);
    return e;
}

DriftState advance_drift(const DriftState& d, double dt, SeededRng& rng) {
    d.validate();
    if (dt <= 0.0) throw ConfigError("drift step must be positive");
    DriftState next = d;
    next.time_s = d.time_s + dt;
    const double a = std::exp(-dt / d.stochastic_tau_s);
    next.wander = d.wander * a +
                  d.stochastic_amplitude * std::sqrt(std::max(0.0, 1.0 - a * a)) * rng.normal(0.0, 1.0);
    return next;
}

} // namespace mmqkd
