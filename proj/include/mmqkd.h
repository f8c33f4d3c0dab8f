/* C interface to the multimode-fiber QKD simulator.
 *
 * Configurations are opaque handles holding a full JSON document (every key
 * at its current value).  Mutators merge JSON fragments into that document
 * with key/type checking; full semantic validation happens when a run starts.
 *
 * Every fallible call returns a status code; on failure, mmqkd_last_error()
 * returns a message describing the most recent failure on the calling thread
 * (valid until the next failing call on the same thread).
 *
 * Strings returned as char* (mmqkd_config_to_json) are heap-allocated and
 * must be released with mmqkd_string_free().
 */
#ifndef MMQKD_H
#define MMQKD_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

enum {
    MMQKD_OK = 0,
    MMQKD_ERR_CONFIG = 1,      /* invalid configuration or unknown key */
    MMQKD_ERR_RUNTIME = 2,     /* I/O, malformed input data, simulation failure */
    MMQKD_ERR_CALIBRATION = 3, /* calibration did not converge */
};

typedef struct mmqkd_config mmqkd_config;

/* Fresh configuration holding the built-in (calibrated) defaults. NULL on
 * allocation failure. */
mmqkd_config* mmqkd_config_new(void);
void mmqkd_config_free(mmqkd_config* cfg);

/* Merge a JSON config file / JSON text / single key into the document.
 * Unknown keys and wrongly-typed values are rejected.  `key` is dotted
 * ("channel.kappa_per_km"); `json_value` is JSON text (so "0.004", "true",
 * "[1,2,5]", "\"adapter\"").  mmqkd_config_set_string takes the value as a
 * raw unquoted string instead. */
int mmqkd_config_load(mmqkd_config* cfg, const char* path);
int mmqkd_config_merge_json(mmqkd_config* cfg, const char* json_text);
int mmqkd_config_set(mmqkd_config* cfg, const char* key, const char* json_value);
int mmqkd_config_set_string(mmqkd_config* cfg, const char* key, const char* value);

/* Full canonical JSON dump of the current document (two-space indented). */
char* mmqkd_config_to_json(const mmqkd_config* cfg);

/* Validate the document and execute the configured mode (sweep, stability,
 * calibrate, analyze).  Artifacts are written to the configured out_dir. */
int mmqkd_run(const mmqkd_config* cfg);

const char* mmqkd_last_error(void);
void mmqkd_string_free(char* s);

/* ---- plain-C key-rate kernels (no handles involved) ---- */

typedef struct {
    double q_signal; /* signal-class gain (per-pulse detection probability) */
    double q_decoy;  /* decoy-class gain */
    double e_signal; /* signal-class QBER */
    double e_decoy;  /* decoy-class QBER */
    double y0;       /* vacuum yield */
    double mu;       /* signal intensity (mean photons) */
    double nu;       /* decoy intensity */
    double e0;       /* vacuum error rate */
    double f_ec;     /* error-correction inefficiency */
    double p_z;      /* key-basis bias */
    double clock_hz; /* pulse rate */
} mmqkd_keyrate_inputs;

void mmqkd_keyrate_inputs_default(mmqkd_keyrate_inputs* in);

/* Two-decoy asymptotic bounds and rate; out-parameters are written on
 * MMQKD_OK only. */
int mmqkd_y1_lower_bound(const mmqkd_keyrate_inputs* in, double* y1);
int mmqkd_e1_upper_bound(const mmqkd_keyrate_inputs* in, double y1, double* e1);
int mmqkd_secure_key_rate(const mmqkd_keyrate_inputs* in, double* bps);

/* Fiber length to the equivalent single-mode loss at `db_per_km` (0 selects
 * the 0.3 dB/km default). */
int mmqkd_equivalent_loss_db(double length_km, double db_per_km, double* db);

#ifdef __cplusplus
}
#endif

#endif /* MMQKD_H */
