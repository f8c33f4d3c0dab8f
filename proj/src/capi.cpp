#include "mmqkd.h"

#include "core/config.hpp"
#include "core/domain.hpp"
#include "core/experiment.hpp"
#include "core/keyrate.hpp"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <fstream>
#include <new>
#include <string>

using nlohmann::json;
using nlohmann::ordered_json;

struct mmqkd_config {
    ordered_json doc;
};

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

// Exceptions from run paths: bad configuration is distinct from bad input
// data or I/O, which is distinct from a calibration that refused to converge.
int status_from_exception() {
    try {
        throw;
    } catch (const mmqkd::ConfigError& e) {
        set_error(e.what());
        return MMQKD_ERR_CONFIG;
    } catch (const mmqkd::CalibrationError& e) {
        set_error(e.what());
        return MMQKD_ERR_CALIBRATION;
    } catch (const std::exception& e) {
        set_error(e.what());
        return MMQKD_ERR_RUNTIME;
    } catch (...) {
        set_error("unknown error");
        return MMQKD_ERR_RUNTIME;
    }
}

// The stateless math kernels can only fail on bad arguments.
int config_error_from_exception() {
    try {
        throw;
    } catch (const std::exception& e) {
        set_error(e.what());
    } catch (...) {
        set_error("unknown error");
    }
    return MMQKD_ERR_CONFIG;
}

// Mutation paths only touch configuration, so every failure is ERR_CONFIG.
int merge_fragment(mmqkd_config* cfg, const ordered_json& fragment) {
    try {
        mmqkd::config_from_json(fragment, /*validate=*/false); // keys and types
        cfg->doc.update(fragment, /*merge_objects=*/true);
        return MMQKD_OK;
    } catch (const std::exception& e) {
        set_error(e.what());
        return MMQKD_ERR_CONFIG;
    }
}

ordered_json fragment_at(const char* dotted_key, ordered_json value) {
    std::string path(dotted_key ? dotted_key : "");
    for (auto& c : path)
        if (c == '.')
            c = '/';
    ordered_json fragment;
    fragment[ordered_json::json_pointer("/" + path)] = std::move(value);
    return fragment;
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out)
        std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

mmqkd::KeyRateInputs to_inputs(const mmqkd_keyrate_inputs* in) {
    mmqkd::KeyRateInputs k;
    k.q_signal = in->q_signal;
    k.q_decoy = in->q_decoy;
    k.e_signal = in->e_signal;
    k.e_decoy = in->e_decoy;
    k.y0 = in->y0;
    k.mu = in->mu;
    k.nu = in->nu;
    k.e0 = in->e0;
    k.f_ec = in->f_ec;
    k.p_z = in->p_z;
    k.clock_hz = in->clock_hz;
    return k;
}

} // namespace

extern "C" {

mmqkd_config* mmqkd_config_new(void) {
    try {
        auto* cfg = new mmqkd_config;
        cfg->doc = mmqkd::config_to_json(mmqkd::RunConfig{});
        return cfg;
    } catch (...) {
        return nullptr;
    }
}

void mmqkd_config_free(mmqkd_config* cfg) { delete cfg; }

int mmqkd_config_load(mmqkd_config* cfg, const char* path) {
    if (!cfg || !path) {
        set_error("null argument");
        return MMQKD_ERR_CONFIG;
    }
    try {
        std::ifstream in(path);
        if (!in) {
            set_error(std::string("cannot open config file: ") + path);
            return MMQKD_ERR_RUNTIME;
        }
        ordered_json fragment;
        try {
            fragment = ordered_json::parse(in);
        } catch (const json::exception& e) {
            set_error(std::string(path) + ": " + e.what());
            return MMQKD_ERR_CONFIG;
        }
        return merge_fragment(cfg, fragment);
    } catch (const std::exception& e) {
        set_error(e.what());
        return MMQKD_ERR_CONFIG;
    }
}

int mmqkd_config_merge_json(mmqkd_config* cfg, const char* json_text) {
    if (!cfg || !json_text) {
        set_error("null argument");
        return MMQKD_ERR_CONFIG;
    }
    ordered_json fragment;
    try {
        fragment = ordered_json::parse(json_text);
    } catch (const json::exception& e) {
        set_error(e.what());
        return MMQKD_ERR_CONFIG;
    }
    return merge_fragment(cfg, fragment);
}

int mmqkd_config_set(mmqkd_config* cfg, const char* key, const char* json_value) {
    if (!cfg || !key || !json_value) {
        set_error("null argument");
        return MMQKD_ERR_CONFIG;
    }
    ordered_json value;
    try {
        value = ordered_json::parse(json_value);
    } catch (const json::exception& e) {
        set_error(std::string("value for '") + key + "' is not JSON: " + e.what());
        return MMQKD_ERR_CONFIG;
    }
    try {
        return merge_fragment(cfg, fragment_at(key, std::move(value)));
    } catch (const std::exception& e) {
        set_error(e.what());
        return MMQKD_ERR_CONFIG;
    }
}

int mmqkd_config_set_string(mmqkd_config* cfg, const char* key, const char* value) {
    if (!cfg || !key || !value) {
        set_error("null argument");
        return MMQKD_ERR_CONFIG;
    }
    try {
        return merge_fragment(cfg, fragment_at(key, ordered_json(value)));
    } catch (const std::exception& e) {
        set_error(e.what());
        return MMQKD_ERR_CONFIG;
    }
}

char* mmqkd_config_to_json(const mmqkd_config* cfg) {
    if (!cfg)
        return nullptr;
    try {
        return dup_string(cfg->doc.dump(2));
    } catch (...) {
        return nullptr;
    }
}

int mmqkd_run(const mmqkd_config* cfg) {
    if (!cfg) {
        set_error("null argument");
        return MMQKD_ERR_CONFIG;
    }
    try {
        const mmqkd::RunConfig run_cfg = mmqkd::config_from_json(cfg->doc);
        mmqkd::run(run_cfg);
        return MMQKD_OK;
    } catch (...) {
        return status_from_exception();
    }
}

const char* mmqkd_last_error(void) { return g_last_error.c_str(); }

void mmqkd_string_free(char* s) { std::free(s); }

void mmqkd_keyrate_inputs_default(mmqkd_keyrate_inputs* in) {
    if (!in)
        return;
    const mmqkd::KeyRateInputs k;
    in->q_signal = k.q_signal;
    in->q_decoy = k.q_decoy;
    in->e_signal = k.e_signal;
    in->e_decoy = k.e_decoy;
    in->y0 = k.y0;
    in->mu = k.mu;
    in->nu = k.nu;
    in->e0 = k.e0;
    in->f_ec = k.f_ec;
    in->p_z = k.p_z;
    in->clock_hz = k.clock_hz;
}

int mmqkd_y1_lower_bound(const mmqkd_keyrate_inputs* in, double* y1) {
    if (!in || !y1) {
        set_error("null argument");
        return MMQKD_ERR_CONFIG;
    }
    try {
        *y1 = mmqkd::y1_lower_bound(to_inputs(in));
        return MMQKD_OK;
    } catch (...) {
        return config_error_from_exception();
    }
}

int mmqkd_e1_upper_bound(const mmqkd_keyrate_inputs* in, double y1, double* e1) {
    if (!in || !e1) {
        set_error("null argument");
        return MMQKD_ERR_CONFIG;
    }
    try {
        *e1 = mmqkd::e1_upper_bound(to_inputs(in), y1);
        return MMQKD_OK;
    } catch (...) {
        return config_error_from_exception();
    }
}

int mmqkd_secure_key_rate(const mmqkd_keyrate_inputs* in, double* bps) {
    if (!in || !bps) {
        set_error("null argument");
        return MMQKD_ERR_CONFIG;
    }
    try {
        *bps = mmqkd::secure_key_rate(to_inputs(in));
        return MMQKD_OK;
    } catch (...) {
        return config_error_from_exception();
    }
}

int mmqkd_equivalent_loss_db(double length_km, double db_per_km, double* db) {
    if (!db) {
        set_error("null argument");
        return MMQKD_ERR_CONFIG;
    }
    try {
        *db = db_per_km > 0.0 ? mmqkd::equivalent_loss_db(length_km, db_per_km)
                              : mmqkd::equivalent_loss_db(length_km);
        return MMQKD_OK;
    } catch (...) {
        return config_error_from_exception();
    }
}

} // extern "C"
