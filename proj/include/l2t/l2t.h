/* C API for the l2t data pipeline: builds L2T pretraining datasets from raw
 * text corpora. Handles are opaque; every entry point returns an l2t_status.
 * Status values match the CLI exit codes. */

#ifndef L2T_L2T_H
#define L2T_L2T_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define L2T_API __declspec(dllexport)
#else
#define L2T_API __attribute__((visibility("default")))
#endif

typedef enum l2t_status {
  L2T_OK = 0,
  L2T_ERR_IO = 1,
  L2T_ERR_CONFIG = 2,
  L2T_ERR_VALIDATION = 3,
} l2t_status;

typedef struct l2t_config l2t_config;
typedef struct l2t_report l2t_report;

L2T_API const char* l2t_version(void);

/* Thread-local message for the most recent failing call; empty string when
 * the last call succeeded. The pointer stays valid until the next call on
 * the same thread. */
L2T_API const char* l2t_last_error(void);

/* Configuration handle. Starts from defaults; load/merge JSON, then adjust
 * single keys with dotted paths ("input.path", "task_params.mask_tokens",
 * "seed"). Values are parsed as JSON when possible, else taken as strings. */
L2T_API l2t_status l2t_config_create(l2t_config** out);
L2T_API l2t_status l2t_config_load_file(l2t_config* cfg, const char* path);
L2T_API l2t_status l2t_config_load_json(l2t_config* cfg, const char* json_text);
L2T_API l2t_status l2t_config_set(l2t_config* cfg, const char* dotted_key,
                                  const char* value);
L2T_API void l2t_config_destroy(l2t_config* cfg);

/* Reports carry a JSON document; the pointer is owned by the report. */
L2T_API const char* l2t_report_json(const l2t_report* report);
L2T_API void l2t_report_destroy(l2t_report* report);

/* Segment + transform the whole corpus into L2T samples (no budget, no
 * packing). Writes l2t_samples.jsonl and manifest.json into output_dir. */
L2T_API l2t_status l2t_run_transform(const l2t_config* cfg, l2t_report** manifest_out);

/* Full scenario build: raw/L2T mixture under the token budget, packed and
 * shuffled. Writes raw_samples.jsonl, l2t_samples.jsonl, packed.jsonl and
 * manifest.json into output_dir. */
L2T_API l2t_status l2t_run_mix(const l2t_config* cfg, l2t_report** manifest_out);

/* Pack an existing sample file into fixed-length sequences. */
L2T_API l2t_status l2t_run_pack(const l2t_config* cfg, const char* samples_path,
                                const char* packed_path, int shuffle,
                                l2t_report** report_out);

/* Streaming statistics over a sample file. */
L2T_API l2t_status l2t_dataset_stats(const char* samples_path, l2t_report** report_out);

/* Re-derives every sample in a build from its provenance and checks byte
 * equality, plus oracle recounts and file checksums. Returns
 * L2T_ERR_VALIDATION when any check fails; expected_config may be NULL, in
 * which case the manifest's echoed config is authoritative. */
L2T_API l2t_status l2t_validate(const char* build_dir, const l2t_config* expected_config,
                                l2t_report** report_out);

#ifdef __cplusplus
}
#endif

#endif /* L2T_L2T_H */
