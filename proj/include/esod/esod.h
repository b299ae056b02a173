#ifndef ESOD_ESOD_H
#define ESOD_ESOD_H

/* C interface to the sparse small-object detection core. Every fallible call
 * returns an esod_status; on failure esod_last_error() describes the most
 * recent error on the calling thread. Handles are opaque and owned by the
 * caller, who releases them with the matching destroy function. Strings
 * returned through char** are released with esod_string_free. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define ESOD_API __declspec(dllexport)
#else
#define ESOD_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum esod_status {
    ESOD_OK = 0,
    ESOD_ERR_ARGUMENT = 1,   /* null handle or invalid argument at the API boundary */
    ESOD_ERR_SHAPE = 2,
    ESOD_ERR_PARAMETER = 3,
    ESOD_ERR_FORMAT = 4,
    ESOD_ERR_ANNOTATION = 5,
    ESOD_ERR_PARSE = 6,
    ESOD_ERR_IO = 7,
    ESOD_ERR_INTERNAL = 8
} esod_status;

typedef struct esod_settings esod_settings;
typedef struct esod_sceneset esod_sceneset;
typedef struct esod_report esod_report;
typedef struct esod_mask esod_mask;
typedef struct esod_plan esod_plan;

typedef struct esod_stats {
    size_t scenes;
    size_t objects;
    int k;
    double mean_objects;
    double mean_occupancy;
    double mean_emptiness;
} esod_stats;

ESOD_API const char* esod_version(void);
ESOD_API const char* esod_status_string(esod_status status);
ESOD_API const char* esod_last_error(void);
ESOD_API void esod_string_free(char* s);

/* Settings: defaults, then a key-value file, then individual overrides. */
ESOD_API esod_status esod_settings_create(esod_settings** out);
ESOD_API void esod_settings_destroy(esod_settings* settings);
ESOD_API esod_status esod_settings_load(esod_settings* settings, const char* path);
ESOD_API esod_status esod_settings_set(esod_settings* settings, const char* key, const char* value);
ESOD_API esod_status esod_settings_get(const esod_settings* settings, const char* key, char** out);
ESOD_API esod_status esod_settings_format(const esod_settings* settings, char** out);

/* Scene sets: synthetic or annotation-backed. */
ESOD_API esod_status esod_sceneset_create(esod_sceneset** out);
ESOD_API void esod_sceneset_destroy(esod_sceneset* set);
ESOD_API esod_status esod_sceneset_synth(const esod_settings* settings, int count, esod_sceneset** out);
/* image_path may be null; the scene is then rendered synthetically. */
ESOD_API esod_status esod_sceneset_add_visdrone(esod_sceneset* set, const char* annotation_path, int image_w,
                                                int image_h, const char* image_path);
ESOD_API size_t esod_sceneset_size(const esod_sceneset* set);
ESOD_API esod_status esod_sceneset_object_count(const esod_sceneset* set, size_t index, size_t* out);
/* Writes <name>.txt annotations, and <name>.ppm renders when with_images is non-zero. */
ESOD_API esod_status esod_sceneset_write(const esod_sceneset* set, const char* directory, int with_images,
                                         uint64_t seed);
ESOD_API esod_status esod_sceneset_stats(const esod_sceneset* set, int k, esod_stats* out);

/* Pipeline runs and reports. */
ESOD_API esod_status esod_run(const esod_settings* settings, const esod_sceneset* set, esod_report** out);
ESOD_API esod_status esod_report_load(const char* path, esod_report** out);
ESOD_API esod_status esod_report_merge(const esod_report* const* reports, size_t count, esod_report** out);
ESOD_API void esod_report_destroy(esod_report* report);
ESOD_API size_t esod_report_size(const esod_report* report);
ESOD_API esod_status esod_report_format(const esod_report* report, char** out);
ESOD_API esod_status esod_report_write(const esod_report* report, const char* path);
/* Only reports produced by esod_run carry plans, detections and overlays. */
ESOD_API esod_status esod_report_write_plans(const esod_report* report, const char* directory);
ESOD_API esod_status esod_report_write_detections(const esod_report* report, const char* directory);
ESOD_API esod_status esod_report_write_overlays(const esod_report* report, const char* directory);

/* Masks and slicing. */
ESOD_API esod_status esod_mask_load_pgm(const char* path, esod_mask** out);
ESOD_API void esod_mask_destroy(esod_mask* mask);
ESOD_API int esod_mask_width(const esod_mask* mask);
ESOD_API int esod_mask_height(const esod_mask* mask);
ESOD_API esod_status esod_slice(const esod_settings* settings, const esod_mask* mask, esod_plan** out);
ESOD_API void esod_plan_destroy(esod_plan* plan);
ESOD_API size_t esod_plan_size(const esod_plan* plan);
/* box receives x1, y1, x2, y2 (half-open, mask cells). */
ESOD_API esod_status esod_plan_box(const esod_plan* plan, size_t index, int box[4]);
/* *out is the plan file text; release it with esod_string_free. */
ESOD_API esod_status esod_plan_format(const esod_plan* plan, char** out);
ESOD_API esod_status esod_plan_write(const esod_plan* plan, const char* path);

/* Trains the seeker on a scene set against Gaussian labels of its
 * annotations and saves the parameters. Losses may be null. */
ESOD_API esod_status esod_seeker_train(const esod_settings* settings, const esod_sceneset* set, int steps,
                                       double learning_rate, const char* out_path, double* loss_before,
                                       double* loss_after);

#ifdef __cplusplus
}
#endif

#endif /* ESOD_ESOD_H */
