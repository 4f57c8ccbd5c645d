/* C interface to the hallucination-localization toolkit. */
#ifndef HLOC_HLOC_H
#define HLOC_HLOC_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define HLOC_API __declspec(dllexport)
#else
#define HLOC_API __attribute__((visibility("default")))
#endif

typedef enum hloc_status {
  HLOC_OK = 0,
  HLOC_ERR_USAGE = 1,     /* invalid argument or option */
  HLOC_ERR_SCHEMA = 2,    /* malformed input document */
  HLOC_ERR_INTEGRITY = 3, /* record violates an invariant */
  HLOC_ERR_IO = 4,
  HLOC_ERR_DATA = 5,      /* inputs cannot support the operation */
  HLOC_ERR_CONFIG = 6,
  HLOC_ERR_VERSION = 7,   /* incompatible file format version */
  HLOC_ERR_INTERNAL = 8
} hloc_status;

typedef struct hloc_records hloc_records;
typedef struct hloc_canonicals hloc_canonicals;
typedef struct hloc_model hloc_model;

/* Message for the last failed call on this thread; empty after success. */
HLOC_API const char* hloc_last_error(void);
HLOC_API const char* hloc_status_name(hloc_status status);

HLOC_API const char* hloc_version(void);
HLOC_API int hloc_schema_version(void);
HLOC_API int hloc_model_format_version(void);
HLOC_API int hloc_feature_layout_version(void);

/* Frees any char* returned through an out parameter. */
HLOC_API void hloc_string_free(char* s);

/* Instance files (one JSON record per line). */
HLOC_API hloc_status hloc_records_load(const char* path, hloc_records** out);
HLOC_API void hloc_records_free(hloc_records* records);
HLOC_API size_t hloc_records_count(const hloc_records* records);
HLOC_API hloc_status hloc_records_save(const hloc_records* records, const char* path);
/* Fails with HLOC_ERR_DATA naming the first record in another language. */
HLOC_API hloc_status hloc_records_check_language(const hloc_records* records, const char* language);

HLOC_API hloc_status hloc_canonicals_load(const char* path, hloc_canonicals** out);
HLOC_API void hloc_canonicals_free(hloc_canonicals* canonicals);

/* Checks every line. report_json: {"records", "valid", "problems": [...]}.
 * Returns HLOC_OK even when problems are found; see "problems". */
HLOC_API hloc_status hloc_validate_file(const char* path, char** report_json);

/* result_json: {"normalized", "rename_table": [[name, vK], ...]}. */
HLOC_API hloc_status hloc_normalize_source(const char* source, const char* language, char** result_json);

/* Fills gold_index in place. summary_json counts labeled and matched records;
 * per_canonical_jsonl (optional) receives one line per record. */
HLOC_API hloc_status hloc_localize(hloc_records* records, const hloc_canonicals* canonicals, unsigned jobs,
                                   char** summary_json, char** per_canonical_jsonl);

/* mode: "per-token" or "per-sample". */
HLOC_API hloc_status hloc_featurize_file(const hloc_records* records, const char* mode, int require_labels,
                                         unsigned jobs, const char* out_path);

/* kind: a model kind name; config_json: training options or NULL. */
HLOC_API hloc_status hloc_model_train(const hloc_records* records, const char* kind, const char* config_json,
                                      unsigned jobs, hloc_model** out);
HLOC_API hloc_status hloc_model_save(const hloc_model* model, const char* path);
HLOC_API hloc_status hloc_model_load(const char* path, hloc_model** out);
HLOC_API void hloc_model_free(hloc_model* model);
/* JSON with kind, mode, feature layout, training metadata and warnings. */
HLOC_API hloc_status hloc_model_info(const hloc_model* model, char** info_json);
/* predictions_jsonl: {"id", "predicted_index"} per record; null when no
 * token is flagged. */
HLOC_API hloc_status hloc_model_predict(const hloc_model* model, const hloc_records* records, double threshold,
                                        unsigned jobs, char** predictions_jsonl);

/* options_json keys: model, regime, k, seed, threshold, jobs, train. */
HLOC_API hloc_status hloc_evaluate(const hloc_records* records, const char* options_json, char** report_json,
                                   char** report_csv, char** file_stem);
HLOC_API hloc_status hloc_cross_matrix(const hloc_records* records, const char* options_json, char** report_json,
                                       char** report_csv, char** file_stem);

/* options_json keys: rate_denominator ("prefix" or "all"), group ("model"
 * or "dataset"), jobs. Output keys: type_rates, type_proportions,
 * distributions, plus CSV renderings of both tables. */
HLOC_API hloc_status hloc_analyze(const hloc_records* records, const char* options_json, char** result_json);

/* Runs the built-in worked example; result_json holds the index. */
HLOC_API hloc_status hloc_demo_figure1(char** result_json);

#ifdef __cplusplus
}
#endif

#endif
