/*
 * gibsamf — Adaptive Multi-Factor model estimation via Groupwise
 * Interpretable Basis Selection, with a low-volatility-anomaly analysis
 * pipeline and a synthetic market generator.
 *
 * C interface to the shared library. Handles are opaque; every function
 * returns a status code, and amf_last_error() describes the most recent
 * failure on the calling thread.
 */

#ifndef GIBSAMF_H
#define GIBSAMF_H

#include <stddef.h>

#if defined(_WIN32)
#define AMF_API __declspec(dllexport)
#else
#define AMF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum amf_status {
  AMF_OK = 0,
  AMF_ERR_INVALID_ARGUMENT = 1,
  AMF_ERR_PARSE = 2,
  AMF_ERR_DATA = 3,
  AMF_ERR_NUMERIC = 4,
  AMF_ERR_IO = 5,
  AMF_ERR_INTERNAL = 6
} amf_status;

typedef struct amf_config amf_config;

/* Library version string, e.g. "0.1.0". */
AMF_API const char* amf_version(void);

/* Stable name for a status code ("ok", "parse", ...). */
AMF_API const char* amf_status_name(amf_status status);

/* Message for the calling thread's most recent error; empty string if none. */
AMF_API const char* amf_last_error(void);

/* Configuration handle. Defaults match the documented config schema. */
AMF_API amf_status amf_config_create(amf_config** out);
AMF_API void amf_config_destroy(amf_config* config);

/* Merge a JSON config file / string into the handle. */
AMF_API amf_status amf_config_load_file(amf_config* config, const char* path);
AMF_API amf_status amf_config_load_string(amf_config* config, const char* json_text);

/*
 * Set one option by key. Keys mirror the JSON schema; nested synth options
 * use a dot ("synth.weeks"). Values are plain strings ("out", "42",
 * "2010-01-08", "true", "[1,2,3]").
 */
AMF_API amf_status amf_config_set(amf_config* config, const char* key, const char* value);

/* Read one option back; writes a NUL-terminated string into buf. */
AMF_API amf_status amf_config_get(const amf_config* config, const char* key, char* buf,
                                  size_t buf_len);

/*
 * Commands. amf_run_synth writes returns.csv, meta.csv, factors.csv and
 * ground_truth.json; amf_run_pipeline executes universe -> portfolios ->
 * rolling GIBS/FF5 -> reports and writes ledger.jsonl plus report/;
 * amf_run_dims writes dimensions.csv.
 */
AMF_API amf_status amf_run_synth(const amf_config* config);
AMF_API amf_status amf_run_pipeline(const amf_config* config);
AMF_API amf_status amf_run_dims(const amf_config* config);

#ifdef __cplusplus
}
#endif

#endif /* GIBSAMF_H */
