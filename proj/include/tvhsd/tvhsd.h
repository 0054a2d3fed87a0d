/* C interface to the tvhsd detector: datasets, training, evaluation,
 * cross-validation and prediction.
 *
 * Every function that can fail returns a tvhsd_status. On failure the
 * message is available from tvhsd_last_error() on the same thread until
 * the next failing call. Handles are opaque and owned by the caller. */
#ifndef TVHSD_H
#define TVHSD_H

#include <stddef.h>
#include <stdint.h>

#if defined(TVHSD_BUILDING_LIBRARY)
#define TVHSD_API __attribute__((visibility("default")))
#else
#define TVHSD_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tvhsd_status {
  TVHSD_OK = 0,
  TVHSD_ERR_USAGE = 2,     /* bad argument, shape or config */
  TVHSD_ERR_DATA = 3,      /* unreadable or invalid file */
  TVHSD_ERR_NUMERICAL = 4, /* non-finite values, domain errors */
  TVHSD_ERR_INTERNAL = 5
} tvhsd_status;

typedef struct tvhsd_dataset tvhsd_dataset;
typedef struct tvhsd_model tvhsd_model;

TVHSD_API const char* tvhsd_last_error(void);

/* Datasets */

typedef struct tvhsd_synth_options {
  size_t num_samples;
  size_t num_classes;
  size_t text_dim;
  size_t image_dim;
  double separation;
  double length_noise;
  uint64_t seed;
} tvhsd_synth_options;

TVHSD_API void tvhsd_synth_options_default(tvhsd_synth_options* options);
TVHSD_API tvhsd_status tvhsd_dataset_generate(const tvhsd_synth_options* options,
                                              tvhsd_dataset** out);
TVHSD_API tvhsd_status tvhsd_dataset_load(const char* directory, tvhsd_dataset** out);
TVHSD_API tvhsd_status tvhsd_dataset_save(const tvhsd_dataset* dataset, const char* directory);
TVHSD_API void tvhsd_dataset_free(tvhsd_dataset* dataset);
TVHSD_API size_t tvhsd_dataset_size(const tvhsd_dataset* dataset);
TVHSD_API size_t tvhsd_dataset_num_classes(const tvhsd_dataset* dataset);
/* NULL when index is out of range. Valid while the dataset lives. */
TVHSD_API const char* tvhsd_dataset_id(const tvhsd_dataset* dataset, size_t index);

/* Training. config_json may be NULL or "" for all defaults. Fields set in
 * overrides replace the config file's values; NULL strings and zero has_*
 * flags leave them alone. */

typedef struct tvhsd_train_overrides {
  const char* loss_mode;     /* "trust" | "ce" */
  const char* modality_mode; /* "both" | "text_only" | "image_only" */
  int has_seed;
  uint64_t seed;
  int has_epochs;
  size_t epochs;
} tvhsd_train_overrides;

TVHSD_API tvhsd_status tvhsd_train(const tvhsd_dataset* dataset, const char* config_json,
                                   const tvhsd_train_overrides* overrides, tvhsd_model** out);

TVHSD_API tvhsd_status tvhsd_model_save(const tvhsd_model* model, const char* path);
TVHSD_API tvhsd_status tvhsd_model_load(const char* path, tvhsd_model** out);
TVHSD_API void tvhsd_model_free(tvhsd_model* model);
TVHSD_API size_t tvhsd_model_num_classes(const tvhsd_model* model);

/* Reports are JSON strings released with tvhsd_string_free. edges are the
 * interior length-bin cut points; NULL selects 10,20,35,60. The model's
 * recorded modality mode is applied. */
TVHSD_API tvhsd_status tvhsd_evaluate(const tvhsd_dataset* dataset, const tvhsd_model* model,
                                      const double* edges, size_t num_edges, char** report_json);
TVHSD_API tvhsd_status tvhsd_xval(const tvhsd_dataset* dataset, const char* config_json,
                                  const tvhsd_train_overrides* overrides, size_t folds,
                                  const double* edges, size_t num_edges, char** report_json);

/* predicted and uncertainty hold dataset_size entries; probability holds
 * dataset_size * num_classes, row-major. Any of them may be NULL. */
TVHSD_API tvhsd_status tvhsd_predict(const tvhsd_dataset* dataset, const tvhsd_model* model,
                                     int* predicted, double* uncertainty, double* probability);

TVHSD_API void tvhsd_string_free(char* text);

#ifdef __cplusplus
}
#endif

#endif
