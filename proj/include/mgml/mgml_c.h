/* C interface to the MGML-FENet library.
 *
 * Every function returns a status code and never throws across the
 * boundary. On failure, mgml_last_error() describes the problem for the
 * calling thread. Strings returned through `char**` out-parameters are
 * owned by the caller and must be released with mgml_string_free().
 */
#ifndef MGML_C_H
#define MGML_C_H

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mgml_status {
    MGML_OK = 0,
    MGML_ERR_CONFIG = 2,  /* bad config, bad arguments, bad input files */
    MGML_ERR_RUNTIME = 3  /* I/O failures, numeric failures, internal errors */
} mgml_status;

/* Message for the most recent failure on this thread; empty string if none. */
const char* mgml_last_error(void);

void mgml_string_free(char* s);

/* Trains one model from a config file; writes metrics.csv, checkpoint.mgc
 * and summary.json under out_dir. seed_override < 0 keeps the config seed;
 * branches may be NULL/"" for the default "mb,ffb,fem". */
mgml_status mgml_train(const char* config_path, const char* out_dir,
                       long long seed_override, const char* branches);

/* Evaluates a checkpoint on the configured test split; *out_json receives
 * a JSON summary of the per-branch accuracies. */
mgml_status mgml_eval(const char* config_path, const char* checkpoint_path,
                      const char* branches, char** out_json);

/* Trains the ablation grid (baseline, +FFB, +FEM, full) over the configured
 * number of seeded runs; *out_table receives a mean/std text table and, if
 * out_dir is non-empty, ablation.csv is written there. */
mgml_status mgml_ablate(const char* config_path, const char* out_dir,
                        long long seed_override, char** out_table);

/* Trains the full model under 7-crop and grid anchors with identical seeds;
 * *out_table receives the two-row comparison. */
mgml_status mgml_crop_compare(const char* config_path, const char* out_dir,
                              long long seed_override, char** out_table);

/* Runs one test sample through a checkpoint and writes the input, all main
 * and fusion-branch feature maps and both pooled vectors as tensor files,
 * plus predictions.txt, under out_dir. */
mgml_status mgml_dump_features(const char* config_path,
                               const char* checkpoint_path, int sample_index,
                               const char* out_dir);

/* Writes the configured synthetic dataset as a PPM tree with a manifest. */
mgml_status mgml_gen_data(const char* config_path, const char* out_dir);

/* Prints the anchor list for an (h, w) feature map, one "x1,y1,x2,y2" line
 * per anchor. strategy is "7crop" or "grid"; k is the grid refinement. */
mgml_status mgml_inspect_anchors(int h, int w, double sigma,
                                 const char* strategy, int k, char** out_text);

/* Opaque trained-model handle for single-image inference. */
typedef struct mgml_model mgml_model;

mgml_status mgml_model_load(const char* config_path,
                            const char* checkpoint_path, mgml_model** out_model);

/* image: row-major (channels, height, width) doubles in [0, 1]. */
mgml_status mgml_model_predict(const mgml_model* model, const double* image,
                               int channels, int height, int width,
                               int* out_class);

mgml_status mgml_model_num_classes(const mgml_model* model, int* out_classes);

void mgml_model_free(mgml_model* model);

#ifdef __cplusplus
}
#endif

#endif /* MGML_C_H */
