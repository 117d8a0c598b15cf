/* Public C interface of the multi-camera tracking library.
 *
 * Every function returns an mcpt_status; on failure mcpt_last_error() holds
 * a human-readable message for the calling thread. Handles are opaque and
 * must be released with their destroy function. All paths are UTF-8.
 */
#ifndef MCPT_H
#define MCPT_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mcpt_status {
    MCPT_OK = 0,
    MCPT_ERR_IO = 1,         /* missing/unreadable/unwritable file */
    MCPT_ERR_PARSE = 2,      /* malformed file content */
    MCPT_ERR_CONFIG = 3,     /* invalid configuration or option value */
    MCPT_ERR_INPUT = 4,      /* structurally valid input violating a precondition */
    MCPT_ERR_STATE = 5,      /* operation applied in the wrong pipeline state */
    MCPT_ERR_DEGENERATE = 6, /* numerically degenerate problem */
    MCPT_ERR_INTERNAL = 7    /* invariant violation inside the library */
} mcpt_status;

/* Library version as "major.minor.patch". Static storage; do not free. */
const char* mcpt_version(void);

/* Message of this thread's most recent failing call ("" when none).
 * Valid until the thread's next library call; do not free. */
const char* mcpt_last_error(void);

/* ---- run configuration ---------------------------------------------- */

typedef struct mcpt_config mcpt_config;

/* A config with built-in defaults. */
mcpt_status mcpt_config_create(mcpt_config** out);

/* Parses a flat "key = value" config file; unknown keys are an error. */
mcpt_status mcpt_config_load(const char* path, mcpt_config** out);

/* Applies one "key", "value" override and re-validates. */
mcpt_status mcpt_config_set(mcpt_config* cfg, const char* key, const char* value);

void mcpt_config_destroy(mcpt_config* cfg);

/* ---- synthetic scenes ------------------------------------------------ */

/* Generates a scene from a scenario file into out_dir (detections,
 * embeddings, keypoints, ground-truth tracks, correspondences, ground-truth
 * homographies, oracle tracklets). seed_override, when non-NULL, is a
 * decimal integer replacing the scenario's rng_seed. */
mcpt_status mcpt_generate_scene(const char* scenario_path, const char* seed_override,
                                const char* out_dir);

/* ---- pipeline --------------------------------------------------------- */

/* Estimates one homography per camera from a correspondences file and
 * writes them to out_path (method and parameters come from the config). */
mcpt_status mcpt_calibrate(const mcpt_config* cfg, const char* correspondences_path,
                           const char* out_path);

/* Runs pipeline stages against a scene directory. stages is a
 * comma-separated subset of
 *   calibrate,sct,anchors,stcra,interpolate,write
 * or "all"; execution always follows that fixed order. Stages communicate
 * only through files in out_dir; manifest.txt is rewritten after the run. */
mcpt_status mcpt_run_pipeline(const mcpt_config* cfg, const char* scene_dir,
                              const char* out_dir, const char* stages);

/* ---- evaluation ------------------------------------------------------- */

typedef struct mcpt_eval_report {
    double idf1, idp, idr;
    double precision, recall;
    long long idtp, idfp, idfn;
    long long tp, fp, fn;
} mcpt_eval_report;

/* Identity metrics of predicted tracks against ground truth. match_rule is
 * "iou" (image IoU >= 0.5) or "world" (map distance <= 1 unit). Optional
 * outputs: table_path for the human-readable table, csv_path for the CSV
 * report, report for the raw numbers; each may be NULL. */
mcpt_status mcpt_evaluate(const char* pred_tracks_path, const char* gt_tracks_path,
                          const char* match_rule, const char* table_path,
                          const char* csv_path, mcpt_eval_report* report);

/* ---- rendering -------------------------------------------------------- */

/* Renders a tracks file (or an intermediate tracklets CSV) as a
 * deterministic top-down SVG of the map plane. Tracklets without world
 * coordinates are MCPT_ERR_STATE. */
mcpt_status mcpt_render_topdown(const char* tracks_path, double map_w, double map_h,
                                const char* out_svg_path);

#ifdef __cplusplus
}
#endif

#endif /* MCPT_H */
