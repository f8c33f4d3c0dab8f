#pragma once

#include "domain.hpp"

#include <array>
#include <vector>

namespace mmqkd {

// Measured quantities feeding the two-decoy (vacuum + weak) asymptotic key
// analysis.  Detection probabilities are per sent pulse of that class:
// q_signal/e_signal from the key (Z) basis, e_decoy from the check (X) basis
// decoy-intensity acquisition, y0 from the vacuum-class acquisition.
struct KeyRateInputs {
    double q_signal = 0.0; // per-pulse click probability at intensity mu
    double q_decoy = 0.0;  // per-pulse click probability at intensity nu
    double e_signal = 0.0; // QBER of the key basis at mu
    double e_decoy = 0.0;  // QBER of the check basis at nu
    double y0 = 0.0;       // vacuum yield per pulse
    double mu = 0.4;
    double nu = 0.1;
    double e0 = 0.5;       // error rate of vacuum yields
    double f_ec = 1.16;    // error-correction inefficiency
    double p_z = 0.5;      // basis bias (sifting factor p_z^2)
    double clock_hz = 1.0e9;

    void validate() const;
};

// Lower bound on the single-photon yield Y1, clamped into [0, 1].
double y1_lower_bound(const KeyRateInputs& in);

// Upper bound on the single-photon error rate e1 given a Y1 lower bound.
// Clamped into [0, 0.5]; throws std::domain_error when y1 == 0.
double e1_upper_bound(const KeyRateInputs& in, double y1);

// Asymptotic secure key rate in bits/s:
//   max(0, Q1*(1 - H2(e1)) - Qmu*f_ec*H2(Emu)) * clock * p_z^2
// with Q1 = Y1_lower * mu * exp(-mu).  Returns 0 when Y1_lower = 0.
double secure_key_rate(const KeyRateInputs& in);

// Single-photon bounds supplied externally, e.g. y1 estimated from the key
// basis and e1 from the check basis.  Deriving both from one KeyRateInputs
// would silently mix the two bases' gains (their collection efficiencies
// differ), so cross-basis callers compute each bound in its own basis and
// pass the pair here.
struct DerivedBounds {
    double y1 = 0.0;
    double e1 = 0.5;
};

// Key rate with explicit bounds; the gain/QBER/protocol fields of `in` still
// supply the error-correction cost and sifting factors.
double secure_key_rate(const KeyRateInputs& in, const DerivedBounds& bounds);

struct OptimizeConfig {
    double pz_min = 0.50;
    double pz_max = 0.99;
    double pz_step = 0.01;
    // Coarse simplex grid over (signal, decoy, vacuum) emission probabilities.
    std::vector<std::array<double, 3>> intensity_grid = {
        {0.90, 0.0667, 0.0333},
        {0.90, 0.05, 0.05},
        {0.95, 0.0333, 0.0167},
        {0.95, 0.025, 0.025},
        {0.98, 0.0133, 0.0067},
        {0.98, 0.01, 0.01},
    };
};

struct OptimizeResult {
    double p_z = 0.5;
    std::array<double, 3> intensity_probs{1.0, 0.0, 0.0};
    double skr_bps = 0.0;
};

// Grid search maximizing the run-level key rate p_signal * secure_key_rate;
// only signal pulses distil key, so the emission split enters as a linear
// factor.  Ties resolve to the smallest p_z (ascending scan, strict improve).
OptimizeResult optimize_protocol(const KeyRateInputs& in, const OptimizeConfig& cfg);

// Same search with the single-photon bounds held fixed while the protocol
// knobs vary (asymptotic bounds do not depend on p_z or the emission split).
OptimizeResult optimize_protocol(const KeyRateInputs& in, const DerivedBounds& bounds,
                                 const OptimizeConfig& cfg);

// Closed-form fit of the one-parameter Poisson channel (transmittance eta,
// error fraction e_det riding on transmitted light, dark floor y0) to a
// single signal-intensity observation:
//   Q = 1 - (1 - y0) exp(-eta*mu),   E*Q = e0*y0 + e_det*(Q - y0).
// Used to synthesize the decoy-class observables when an input carries only
// the signal class.  At or below the dark floor both parameters come back 0.
struct FittedChannel {
    double eta = 0.0;
    double e_det = 0.0;
};

FittedChannel fit_poisson_channel(double q_signal, double e_signal, double y0,
                                  double mu, double e0 = 0.5);

// Fill q_decoy/e_decoy of `in` from the channel fitted to its signal fields.
void synthesize_decoy_class(KeyRateInputs& in);

// Nominal equivalent channel loss for the distance axis (quoted per-km figure,
// not the simulated/measured loss).
double equivalent_loss_db(double distance_km, double nominal_db_per_km = 0.3);

} // namespace mmqkd
