/* Underwater frame enhancement, quality scoring, gating, feature matching.
 *
 * C interface to the shared library: opaque handles, status codes, and
 * malloc'd strings/buffers released through the matching uwe_*_free call.
 * All functions are safe to call concurrently on distinct handles; the
 * per-thread uwe_last_error() message describes the most recent failure
 * on the calling thread.
 */
#ifndef UWE_H
#define UWE_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum uwe_status {
    UWE_OK = 0,
    UWE_ERR_INVALID_ARGUMENT = 1,
    UWE_ERR_IO = 2,
    UWE_ERR_UNSUPPORTED_FORMAT = 3,
    UWE_ERR_TRUNCATED_PAYLOAD = 4,
    UWE_ERR_CHANNEL_MISMATCH = 5,
    UWE_ERR_DIMENSION_MISMATCH = 6,
    UWE_ERR_TOO_SMALL = 7,
    UWE_ERR_DEGENERATE_AIRLIGHT = 8,
    UWE_ERR_INSUFFICIENT_DATA = 9,
    UWE_ERR_SINGULAR_DESIGN = 10,
    UWE_ERR_EMPTY_SPLIT = 11,
    UWE_ERR_DEGENERATE_LABELS = 12,
    UWE_ERR_ENHANCER_FAILED = 13,
    UWE_ERR_PARSE = 14,
    UWE_ERR_UNKNOWN = 15
} uwe_status;

const char* uwe_status_name(uwe_status status);
const char* uwe_version(void);

/* Message for the most recent failure on this thread; empty string if none. */
const char* uwe_last_error(void);

/* ---- images ------------------------------------------------------------ */

typedef struct uwe_image uwe_image;

uwe_status uwe_image_decode_pnm(const uint8_t* bytes, size_t size, uwe_image** out);
uwe_status uwe_image_encode_pnm(const uwe_image* img, uint8_t** out_bytes,
                                size_t* out_size);
uwe_status uwe_image_read_file(const char* path, uwe_image** out);
uwe_status uwe_image_write_file(const uwe_image* img, const char* path);
uwe_status uwe_image_clone(const uwe_image* img, uwe_image** out);
void uwe_image_free(uwe_image* img);
int uwe_image_width(const uwe_image* img);
int uwe_image_height(const uwe_image* img);
int uwe_image_channels(const uwe_image* img);

void uwe_bytes_free(uint8_t* bytes);
void uwe_string_free(char* text);

/* ---- dehazing ----------------------------------------------------------- */

enum { UWE_CHANNELS_ALL_RGB = 0, UWE_CHANNELS_GREEN_BLUE = 1 };
enum { UWE_METHOD_DCP = 0, UWE_METHOD_UDCP = 1 };

typedef struct uwe_dehaze_params {
    int patch_radius;
    double omega;
    double t_floor;
    double airlight_fraction;
    int guided_radius;
    double guided_eps;
    int channel_set; /* ignored by uwe_enhance; the method picks it */
} uwe_dehaze_params;

void uwe_dehaze_params_defaults(uwe_dehaze_params* params);

/* method is UWE_METHOD_DCP or UWE_METHOD_UDCP. */
uwe_status uwe_enhance(const uwe_image* img, const uwe_dehaze_params* params,
                       int method, uwe_image** out);

/* ---- quality metrics ----------------------------------------------------- */

typedef struct uwe_uciqe_coeffs {
    double c1;
    double c2;
    double c3;
} uwe_uciqe_coeffs;

void uwe_uciqe_coeffs_defaults(uwe_uciqe_coeffs* coeffs);

typedef struct uwe_quality_report {
    double sigma_c;
    double con_l;
    double mu_s;
    double uciqe;
    int has_psnr; /* psnr is +infinity when the frames are identical */
    double psnr;
    int has_ssim;
    double ssim;
} uwe_quality_report;

/* ref and coeffs may be NULL; psnr/ssim are filled only when ref is given. */
uwe_status uwe_score(const uwe_image* img, const uwe_image* ref,
                     const uwe_uciqe_coeffs* coeffs, uwe_quality_report* out);
uwe_status uwe_quality_report_json(const uwe_quality_report* report, char** out_json);

/* ---- quality gate --------------------------------------------------------- */

typedef struct uwe_gate_config uwe_gate_config;
typedef struct uwe_gate_outcome uwe_gate_outcome;

uwe_status uwe_gate_config_from_json(const char* json_text, uwe_gate_config** out);
uwe_status uwe_gate_config_read_file(const char* path, uwe_gate_config** out);
void uwe_gate_config_free(uwe_gate_config* config);

uwe_status uwe_run_gate(const uwe_image* img, const uwe_gate_config* config,
                        uwe_gate_outcome** out);
/* Borrowed pointer, valid until the outcome is freed. */
const uwe_image* uwe_gate_outcome_image(const uwe_gate_outcome* outcome);
uwe_status uwe_gate_outcome_json(const uwe_gate_outcome* outcome, char** out_json);
void uwe_gate_outcome_free(uwe_gate_outcome* outcome);

/* Balanced-accuracy threshold over (score, is_clear) labels. */
uwe_status uwe_calibrate_tau(const double* scores, const int* is_clear,
                             size_t count, double* out_tau);

/* ---- coefficient calibration ---------------------------------------------- */

/* Fits UCIQE coefficients from a ratings CSV; holdout_fraction <= 0 skips the
 * holdout evaluation. Returns the fit (and holdout block) as JSON. */
uwe_status uwe_fit_csv_json(const char* csv_path, double holdout_fraction,
                            uint64_t seed, int with_intercept, char** out_json);

/* ---- feature matching ------------------------------------------------------ */

typedef struct uwe_feature_config {
    int n_features;
    double fast_threshold;
    int levels;
    double scale_factor;
    double match_ratio;
} uwe_feature_config;

void uwe_feature_config_defaults(uwe_feature_config* config);

uwe_status uwe_match_report_json(const uwe_image* a, const uwe_image* b,
                                 const uwe_feature_config* config, char** out_json);

/* ---- benchmark report ------------------------------------------------------- */

/* Builds the benchmark JSON (mean and population std derived from the
 * durations array) for externally measured per-frame timings. */
uwe_status uwe_bench_report_json(const double* durations_seconds, size_t count,
                                 const char* method, const char* platform_note,
                                 char** out_json);

#ifdef __cplusplus
}
#endif

#endif /* UWE_H */
