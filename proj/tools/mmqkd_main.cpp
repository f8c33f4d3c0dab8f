// Command-line front end: sweep, stability, calibrate, and analyze runs.
// Talks to the simulator exclusively through the C API, with flag > config
// file > built-in default precedence.
#include "mmqkd.h"

#include "CLI11.hpp"

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

namespace {

struct ConfigDeleter {
    void operator()(mmqkd_config* c) const { mmqkd_config_free(c); }
};
using ConfigHandle = std::unique_ptr<mmqkd_config, ConfigDeleter>;

int fail(int status) {
    std::fprintf(stderr, "mmqkd: %s\n", mmqkd_last_error());
    return status;
}

std::string json_array(const std::vector<double>& xs) {
    std::string out = "[";
    char buf[64];
    for (std::size_t i = 0; i < xs.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", xs[i]);
        out += buf;
        if (i + 1 < xs.size())
            out += ',';
    }
    out += ']';
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Decoy-state BB84 over multimode fiber: simulation and key-rate analysis"};
    app.require_subcommand(1);

    std::string config_path, out_dir, launch, analyze_input;
    std::uint64_t seed = 0;
    std::vector<double> distances;
    int trials = 0;
    double duration = 0.0, step = 0.0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config file");
        sub->add_option("--seed", seed, "RNG seed");
        sub->add_option("--out", out_dir, "output directory");
    };
    CLI::App* sweep = app.add_subcommand("sweep", "distance sweep: observables, key rates, plots");
    add_common(sweep);
    sweep->add_option("--distances", distances, "fiber lengths in km")->delimiter(',');
    sweep->add_option("--launch", launch, "underfill, adapter, or both");
    sweep->add_option("--trials", trials, "trials per distance");

    CLI::App* stability = app.add_subcommand("stability", "drift time series at one distance");
    add_common(stability);
    stability->add_option("--duration", duration, "simulated seconds");
    stability->add_option("--step", step, "seconds between acquisitions");
    stability->add_option("--launch", launch, "underfill or adapter");

    CLI::App* calibrate = app.add_subcommand("calibrate", "fit channel parameters to anchors");
    add_common(calibrate);

    CLI::App* analyze = app.add_subcommand("analyze", "key rates from a measured observables CSV");
    add_common(analyze);
    analyze->add_option("input", analyze_input, "observables CSV")->required();

    CLI11_PARSE(app, argc, argv);
    CLI::App* sub = app.get_subcommands().front();

    ConfigHandle cfg(mmqkd_config_new());
    if (!cfg) {
        std::fprintf(stderr, "mmqkd: out of memory\n");
        return MMQKD_ERR_RUNTIME;
    }
    if (sub->count("--config") && mmqkd_config_load(cfg.get(), config_path.c_str()))
        return fail(MMQKD_ERR_CONFIG);

    if (mmqkd_config_set_string(cfg.get(), "mode", sub->get_name().c_str()))
        return fail(MMQKD_ERR_CONFIG);
    if (sub->count("--seed") &&
        mmqkd_config_set(cfg.get(), "seed", std::to_string(seed).c_str()))
        return fail(MMQKD_ERR_CONFIG);
    if (sub->count("--out") && mmqkd_config_set_string(cfg.get(), "out_dir", out_dir.c_str()))
        return fail(MMQKD_ERR_CONFIG);
    if (sub == sweep) {
        if (sub->count("--distances") &&
            mmqkd_config_set(cfg.get(), "distances_km", json_array(distances).c_str()))
            return fail(MMQKD_ERR_CONFIG);
        if (sub->count("--trials") &&
            mmqkd_config_set(cfg.get(), "trials", std::to_string(trials).c_str()))
            return fail(MMQKD_ERR_CONFIG);
        if (sub->count("--launch") &&
            mmqkd_config_set_string(cfg.get(), "launch", launch.c_str()))
            return fail(MMQKD_ERR_CONFIG);
    }
    if (sub == stability) {
        if (sub->count("--launch") &&
            mmqkd_config_set_string(cfg.get(), "stability_launch", launch.c_str()))
            return fail(MMQKD_ERR_CONFIG);
        if (sub->count("--duration") &&
            mmqkd_config_set(cfg.get(), "stability_duration_s",
                             std::to_string(duration).c_str()))
            return fail(MMQKD_ERR_CONFIG);
        if (sub->count("--step") &&
            mmqkd_config_set(cfg.get(), "stability_step_s", std::to_string(step).c_str()))
            return fail(MMQKD_ERR_CONFIG);
    }
    if (sub == analyze &&
        mmqkd_config_set_string(cfg.get(), "analyze_input", analyze_input.c_str()))
        return fail(MMQKD_ERR_CONFIG);

    if (const int status = mmqkd_run(cfg.get()))
        return fail(status);
    return 0;
}
