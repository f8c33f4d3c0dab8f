#include "keyrate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mmqkd {

void KeyRateInputs::validate() const {
    auto probability = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!probability(q_signal) || !probability(q_decoy) || !probability(y0))
        throw ConfigError("keyrate: yields must be probabilities in [0, 1]");
    if (!probability(e_signal) || !probability(e_decoy) || !probability(e0))
        throw ConfigError("keyrate: error rates must lie in [0, 1]");
    if (!(mu > nu && nu > 0.0))
        throw ConfigError("keyrate: intensities must satisfy mu > nu > 0");
    if (!(f_ec >= 1.0))
        throw ConfigError("keyrate: f_ec must be >= 1");
    if (!(p_z > 0.0 && p_z < 1.0))
        throw ConfigError("keyrate: p_z must lie in (0, 1)");
    if (!(clock_hz > 0.0))
        throw ConfigError("keyrate: clock_hz must be positive");
    // A consistent channel cannot click less often under mu than the vacuum
    // contribution alone would make it.
    if (q_signal + 1e-15 < y0 * std::exp(-mu))
        throw ConfigError("keyrate: q_signal below its vacuum floor y0*exp(-mu)");
}

double y1_lower_bound(const KeyRateInputs& in) {
    in.validate();
    const double mu = in.mu;
    const double nu = in.nu;
    const double scale = mu / (mu * nu - nu * nu);
    const double raw = scale * (in.q_decoy * std::exp(nu)
                                - in.q_signal * std::exp(mu) * (nu * nu) / (mu * mu)
                                - (mu * mu - nu * nu) / (mu * mu) * in.y0);
    return std::clamp(raw, 0.0, 1.0);
}

double e1_upper_bound(const KeyRateInputs& in, double y1) {
    in.validate();
    if (y1 == 0.0)
        throw std::domain_error("e1_upper_bound: undefined for y1 = 0");
    if (!(y1 > 0.0 && y1 <= 1.0))
        throw std::domain_error("e1_upper_bound: y1 outside (0, 1]");
    const double raw = (in.e_decoy * in.q_decoy * std::exp(in.nu) - in.e0 * in.y0)
                       / (y1 * in.nu);
    return std::clamp(raw, 0.0, 0.5);
}

double secure_key_rate(const KeyRateInputs& in, const DerivedBounds& bounds) {
    in.validate();
    if (!(bounds.y1 >= 0.0 && bounds.y1 <= 1.0))
        throw ConfigError("secure_key_rate: y1 bound outside [0, 1]");
    if (!(bounds.e1 >= 0.0 && bounds.e1 <= 0.5))
        throw ConfigError("secure_key_rate: e1 bound outside [0, 0.5]");
    if (bounds.y1 <= 0.0)
        return 0.0;
    const double q1 = bounds.y1 * in.mu * std::exp(-in.mu);
    const double rate_per_pulse =
        q1 * (1.0 - binary_entropy(bounds.e1))
        - in.q_signal * in.f_ec * binary_entropy(std::min(in.e_signal, 0.5));
    return std::max(0.0, rate_per_pulse) * in.clock_hz * in.p_z * in.p_z;
}

double secure_key_rate(const KeyRateInputs& in) {
    const double y1 = y1_lower_bound(in);
    if (y1 <= 0.0)
        return 0.0;
    return secure_key_rate(in, DerivedBounds{y1, e1_upper_bound(in, y1)});
}

namespace {

template <typename RateFn>
OptimizeResult optimize_over_grid(const OptimizeConfig& cfg, RateFn rate_at) {
    if (!(cfg.pz_step > 0.0) || !(cfg.pz_min > 0.0) || !(cfg.pz_max < 1.0) ||
        cfg.pz_min > cfg.pz_max)
        throw ConfigError("optimize_protocol: invalid p_z grid");
    if (cfg.intensity_grid.empty())
        throw ConfigError("optimize_protocol: empty intensity grid");
    for (const auto& probs : cfg.intensity_grid) {
        const double sum = probs[0] + probs[1] + probs[2];
        if (probs[0] < 0 || probs[1] < 0 || probs[2] < 0 || std::abs(sum - 1.0) > 1e-6)
            throw ConfigError("optimize_protocol: intensity grid entries must be distributions");
    }

    OptimizeResult best;
    bool first = true;
    for (const auto& probs : cfg.intensity_grid) {
        for (double pz = cfg.pz_min; pz <= cfg.pz_max + 1e-12; pz += cfg.pz_step) {
            const double pz_point = std::min(pz, cfg.pz_max);
            const double j = probs[0] * rate_at(pz_point);
            if (first || j > best.skr_bps) {
                best.p_z = pz_point;
                best.intensity_probs = probs;
                best.skr_bps = j;
                first = false;
            }
        }
    }
    return best;
}

} // namespace

OptimizeResult optimize_protocol(const KeyRateInputs& in, const OptimizeConfig& cfg) {
    return optimize_over_grid(cfg, [&](double pz) {
        KeyRateInputs point = in;
        point.p_z = pz;
        return secure_key_rate(point);
    });
}

OptimizeResult optimize_protocol(const KeyRateInputs& in, const DerivedBounds& bounds,
                                 const OptimizeConfig& cfg) {
    return optimize_over_grid(cfg, [&](double pz) {
        KeyRateInputs point = in;
        point.p_z = pz;
        return secure_key_rate(point, bounds);
    });
}

FittedChannel fit_poisson_channel(double q_signal, double e_signal, double y0,
                                  double mu, double e0) {
    if (!(mu > 0.0))
        throw ConfigError("fit_poisson_channel: mu must be positive");
    if (!(q_signal >= 0.0 && q_signal < 1.0) || !(y0 >= 0.0 && y0 < 1.0))
        throw ConfigError("fit_poisson_channel: click probabilities must lie in [0, 1)");
    if (!(e_signal >= 0.0 && e_signal <= 1.0) || !(e0 >= 0.0 && e0 <= 1.0))
        throw ConfigError("fit_poisson_channel: error rates must lie in [0, 1]");
    FittedChannel fit;
    if (q_signal <= y0)
        return fit;
    fit.eta = -std::log((1.0 - q_signal) / (1.0 - y0)) / mu;
    fit.e_det = std::clamp((e_signal * q_signal - e0 * y0) / (q_signal - y0), 0.0, 1.0);
    return fit;
}

void synthesize_decoy_class(KeyRateInputs& in) {
    const FittedChannel fit =
        fit_poisson_channel(in.q_signal, in.e_signal, in.y0, in.mu, in.e0);
    in.q_decoy = 1.0 - (1.0 - in.y0) * std::exp(-fit.eta * in.nu);
    in.e_decoy = in.q_decoy > 0.0
        ? std::clamp((in.e0 * in.y0 + fit.e_det * (in.q_decoy - in.y0)) / in.q_decoy,
                     0.0, 1.0)
        : in.e0;
}

double equivalent_loss_db(double distance_km, double nominal_db_per_km) {
    if (!(distance_km >= 0.0))
        throw std::domain_error("equivalent_loss_db: distance must be >= 0");
    return nominal_db_per_km * distance_km;
}

} // namespace mmqkd
