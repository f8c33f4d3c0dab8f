#pragma once

#include "core/analysis.hpp"
#include "core/config.hpp"
#include "core/csvio.hpp"
#include "core/keyrate.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace mmqkd {

// Channel realization shared by every acquisition of one trial: both bases and
// all three intensity classes measure the same fiber state.
struct TrialChannel {
    ModePowerState state;
    double loss_db = 0.0;      // -10 log10 of total in-fiber power at the output
    double eta_x = 0.0;        // optical transmittance into the interferometer arm
    double eta_z = 0.0;        // optical transmittance into the time-bin arm
    double phase_error = 0.0;  // X-basis error probability (visibility floor included)
    double timing_error = 0.0; // Z-basis error probability (intrinsic floor included)
};

// Launch + propagate + receiver-arm budgets for one trial.  `distance_km` and
// `kind` override the corresponding channel-config fields.
TrialChannel realize_channel(const RunConfig& cfg, double distance_km, LaunchKind kind,
                             const DriftState& drift, const SeededRng& trial_rng);

// Same, but against a frozen launch state (stability runs keep the launch and
// connector draws fixed while the drift evolves).
TrialChannel finish_channel(const RunConfig& cfg, const ChannelConfig& channel,
                            const ModePowerState& launched, const DriftState& drift,
                            const SeededRng& trial_rng);

// Acquisition pattern of one cell: a single basis and intensity class with
// uniformly random bits.
SymbolPattern single_class_pattern(std::size_t length, Basis basis, IntensityClass cls,
                                   SeededRng& rng);

// One acquisition of one cell reduced to QBER/gain.  The analytic mode draws
// Poisson counts from the exact per-gate click probabilities; the event mode
// emits, propagates and detects individual symbols and runs the full
// histogram -> alignment -> scoring chain.  Only qber/gain (and intensity/
// basis) are filled; the caller stamps distance/launch/trial/loss.
LinkObservables simulate_cell(const RunConfig& cfg, const TrialChannel& ch, Basis basis,
                              IntensityClass cls, const SeededRng& trial_rng);

// Expected (non-sampled) observables of the same cell model; the calibration
// evaluator and the oracle that sampling modes are tested against.
LinkObservables expected_cell(const RunConfig& cfg, const TrialChannel& ch, Basis basis,
                              IntensityClass cls);

// One secure-key-rate result per (distance, launch) group of an observables
// table, in first-appearance order.
struct SkrRow {
    double distance_km = 0.0;
    std::string launch;
    double equivalent_loss_db = 0.0;
    double measured_loss_db = 0.0; // NaN when the input carries no loss column
    double skr_bps = 0.0;
    double p_z = 0.5;
    double p_signal = 1.0;
    double p_decoy = 0.0;
    double p_vacuum = 0.0;
    double y1 = 0.0;
    double e1 = 0.5;
    bool model_derived = false; // decoy/vacuum classes synthesized, not measured
};

// The decoy pipeline over a parsed observables table.  Gains are in the
// photon-ratio convention of the tables (clicks per sent photon; per-pulse for
// vacuum rows); the key basis is Z when present, the error bound comes from X
// when present.  Groups carrying only signal-intensity rows get their decoy
// and vacuum classes from the fitted single-intensity channel (model_derived).
std::vector<SkrRow> analyze_observables(const CsvTable& table, const RunConfig& cfg);

std::vector<LinkObservables> observables_from_csv(const CsvTable& table);
void write_observables_csv(const std::filesystem::path& path,
                           const std::vector<LinkObservables>& rows);
void write_skr_csv(const std::filesystem::path& path, const std::vector<SkrRow>& rows);

// Calibration targets; any anchor can be dropped from the fit.  Gains use the
// photon-ratio convention.
struct CalibrationAnchors {
    bool use_gain = true;
    double gain_x_5km = 4e-4; // X-basis signal gain, 5 km, underfill
    bool use_qber_x = true;
    double qber_x_10km = 0.038; // X-basis signal QBER, 10 km, underfill
    bool use_qber_z = true;
    double qber_z_10km = 0.005; // Z-basis signal QBER, 10 km, underfill
    bool use_gain_spread = true;
    double gain_rel_std = 0.065; // relative gain fluctuation under drift
};

struct CalibrationReport {
    bool converged = false;
    int passes = 0;
    // Signed relative residuals (model/target - 1); NaN for unused anchors.
    double residual_gain = 0.0;
    double residual_qber_x = 0.0;
    double residual_qber_z = 0.0;
    double residual_spread = 0.0;
    RunConfig calibrated;
};

// Deterministic coordinate-descent fit of {base excess, phase coefficient,
// timing coefficient, coupling rate, drift amplitude} to the anchors, against
// the expectation-valued model (connectors at their means, launch fraction at
// midrange, no sampling).  The stochastic drift amplitude stays tied to half
// the periodic amplitude.  Does not throw on non-convergence; see `converged`.
CalibrationReport calibrate(const RunConfig& cfg, const CalibrationAnchors& anchors);

// Experiment drivers; each writes its tables, plots and summary.json into
// cfg.out_dir (created if needed).
void run_sweep(const RunConfig& cfg);
void run_stability(const RunConfig& cfg);
void run_calibrate(const RunConfig& cfg); // CalibrationError on non-convergence
void run_analyze(const RunConfig& cfg);
void run(const RunConfig& cfg); // dispatch on cfg.mode

} // namespace mmqkd
