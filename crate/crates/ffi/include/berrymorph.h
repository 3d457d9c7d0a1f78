#ifndef BERRYMORPH_H
#define BERRYMORPH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BmStatus {
  BM_STATUS_OK = 0,
  BM_STATUS_NULL_POINTER = 1,
  BM_STATUS_INVALID_ARGUMENT = 2,
  BM_STATUS_PARSE = 3,
  BM_STATUS_IO = 4,
  // Input was well formed but too small or degenerate for the request.
  BM_STATUS_DATA = 5,
  BM_STATUS_OUT_OF_RANGE = 6,
  BM_STATUS_NOT_FOUND = 7,
  BM_STATUS_INTERNAL = 8,
  BM_STATUS_PANIC = 9,
} BmStatus;

// Output of the berry filter for one mask file.
typedef struct BmFilterResult BmFilterResult;

// Parsed mask file.
typedef struct BmMaskFile BmMaskFile;

typedef struct BmFilterCounts {
  size_t input;
  size_t removed_multi;
  size_t removed_metric;
  size_t removed_efd_pca;
  size_t kept;
} BmFilterCounts;

// Pixel-unit geometry of one kept berry.
typedef struct BmBerryMetrics {
  double area;
  double perimeter;
  double length;
  double width;
  double aspect_ratio;
  double circularity;
  double centroid_x;
  double centroid_y;
} BmBerryMetrics;

// Cluster descriptors in mm when a scale is known, otherwise pixels.
// `ecdf` is valid only when `has_ecdf` is nonzero.
typedef struct BmClusterSummary {
  size_t berry_count;
  double compactness;
  double berry_area;
  double cluster_area;
  double cluster_length;
  double cluster_width;
  double cluster_perimeter;
  double cluster_aspect;
  double scale;
  uint8_t has_ecdf;
  // x25, x50, x75, y25, y50, y75.
  double ecdf[6];
} BmClusterSummary;

typedef struct BmRepeatability {
  double var_g;
  double var_e;
  double repeatability;
  size_t n_groups;
} BmRepeatability;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version, static storage.
const char *bm_version(void);

// Message of the last failed call on this thread, or null. Valid until the
// next library call on the same thread.
const char *bm_last_error(void);

// Frees a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not be freed twice.
void bm_string_free(char *s);

// Parses mask-file JSON.
//
// # Safety
// `json` is a NUL-terminated string; `out` is writable.
enum BmStatus bm_mask_file_parse(const char *json, struct BmMaskFile **out);

// Loads a mask file from disk.
//
// # Safety
// `path` is a NUL-terminated string; `out` is writable.
enum BmStatus bm_mask_file_load(const char *path, struct BmMaskFile **out);

// Number of mask records.
//
// # Safety
// `file` is a live handle; `out` is writable.
enum BmStatus bm_mask_file_len(const struct BmMaskFile *file, size_t *out);

// # Safety
// `file` comes from this library and is not used afterwards. Null is ignored.
void bm_mask_file_free(struct BmMaskFile *file);

// Decodes column-major COCO run lengths into a row-major 0/1 buffer of
// `height * width` bytes.
//
// # Safety
// `counts` holds `n_counts` values; `buf` holds `buf_len` bytes.
enum BmStatus bm_rle_decode(const uint32_t *counts,
                            size_t n_counts,
                            size_t height,
                            size_t width,
                            uint8_t *buf,
                            size_t buf_len);

// Runs the berry filter. `config_json` may be null for defaults; otherwise
// it is a JSON object of filter settings. A nonzero `detect_reference`
// looks for the scale reference with default settings.
//
// # Safety
// `file` is a live handle; `config_json` is null or NUL-terminated; `out`
// is writable.
enum BmStatus bm_filter_run(const struct BmMaskFile *file,
                            const char *config_json,
                            uint8_t detect_reference,
                            struct BmFilterResult **out);

// # Safety
// `res` is a live handle; `out` is writable.
enum BmStatus bm_filter_counts(const struct BmFilterResult *res, struct BmFilterCounts *out);

// Metrics of the `index`-th kept berry.
//
// # Safety
// `res` is a live handle; `out` is writable.
enum BmStatus bm_filter_berry(const struct BmFilterResult *res,
                              size_t index,
                              struct BmBerryMetrics *out);

// Scale from the detected reference; `NotFound` when none was detected.
//
// # Safety
// `res` is a live handle; `out` is writable.
enum BmStatus bm_filter_mm_per_px(const struct BmFilterResult *res, double *out);

// Filter report (counts, dispositions, warnings) as JSON. Free the string
// with [`bm_string_free`].
//
// # Safety
// `res` is a live handle; `out` is writable.
enum BmStatus bm_filter_report_json(const struct BmFilterResult *res, char **out);

// Cluster architecture of the kept berries. `mm_per_px <= 0` uses the
// detected reference if any, otherwise pixels. `concavity <= 0` uses the
// default.
//
// # Safety
// `res` is a live handle; `out` is writable.
enum BmStatus bm_cluster_summary(const struct BmFilterResult *res,
                                 double mm_per_px,
                                 double concavity,
                                 struct BmClusterSummary *out);

// Repeatability of `values` grouped by the integer genotype ids in `groups`.
//
// # Safety
// `values` and `groups` each hold `n` elements; `out` is writable.
enum BmStatus bm_repeatability(const double *values,
                               const uint32_t *groups,
                               size_t n,
                               struct BmRepeatability *out);

// # Safety
// `res` comes from this library and is not used afterwards. Null is ignored.
void bm_filter_result_free(struct BmFilterResult *res);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BERRYMORPH_H */
