#ifndef URBANTACTIC_H
#define URBANTACTIC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Normalization applied to co-occurrence rows.
typedef enum UtNormMode {
  UT_NORM_MODE_CONDITIONAL = 0,
  UT_NORM_MODE_ROW_SUM = 1,
} UtNormMode;

// Result code of every fallible call.
typedef enum UtStatus {
  UT_STATUS_OK = 0,
  UT_STATUS_NULL_POINTER = 1,
  UT_STATUS_INVALID_UTF8 = 2,
  UT_STATUS_INVALID_ARGUMENT = 3,
  UT_STATUS_PARSE_ERROR = 4,
  UT_STATUS_UNKNOWN_CLASS = 5,
  UT_STATUS_MESH_ERROR = 6,
  UT_STATUS_IMAGE_ERROR = 7,
  UT_STATUS_INTERNAL = 99,
} UtStatus;

// Opaque co-occurrence matrix.
typedef struct UtMatrix UtMatrix;

// Opaque triangle mesh.
typedef struct UtMesh UtMesh;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty after a success.
// The pointer stays valid until the next call on the same thread.
const char *ut_last_error(void);

// Release a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not be freed twice.
void ut_string_free(char *s);

// Load a matrix from snapshot JSON.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer.
enum UtStatus ut_matrix_from_snapshot(const char *json, struct UtMatrix **out);

// # Safety
// `m` must come from [`ut_matrix_from_snapshot`] and not be freed twice.
void ut_matrix_free(struct UtMatrix *m);

// Number of vocabulary classes; 0 for a null handle.
//
// # Safety
// `m` must be null or a live matrix handle.
size_t ut_matrix_class_count(const struct UtMatrix *m);

// Number of scenes containing both classes (one class twice: its scene count).
//
// # Safety
// `m` must be a live handle, `a` and `b` NUL-terminated, `out` valid.
enum UtStatus ut_matrix_pair_count(const struct UtMatrix *m,
                                   const char *a,
                                   const char *b,
                                   uint64_t *out);

// Top-`k` complements of `anchor` as a JSON ranking. `exclude_person`
// non-zero leaves the person class out.
//
// # Safety
// `m` must be a live handle, `anchor` NUL-terminated, `out_json` valid.
enum UtStatus ut_matrix_top_k(const struct UtMatrix *m,
                              const char *anchor,
                              size_t k,
                              enum UtNormMode mode,
                              int32_t exclude_person,
                              char **out_json);

// Parse a candidate reply. Produces `{"rows": [[name, description], ...],
// "rejected": [{"line", "reason"}, ...]}`.
//
// # Safety
// `reply` must be NUL-terminated and `out_json` valid.
enum UtStatus ut_parse_candidates(const char *reply, char **out_json);

// Build the vision-language prompt for a scene (JSON) and its image file.
//
// # Safety
// All string arguments must be NUL-terminated and `out_prompt` valid.
enum UtStatus ut_build_prompt(const char *scene_json,
                              const char *image_path,
                              const char *anchor,
                              const char *co_object,
                              char **out_prompt);

// Parse Wavefront OBJ text.
//
// # Safety
// `obj` must be NUL-terminated and `out` valid.
enum UtStatus ut_mesh_parse_obj(const char *obj, struct UtMesh **out);

// # Safety
// `m` must come from this library and not be freed twice.
void ut_mesh_free(struct UtMesh *m);

// Triangle count; 0 for a null handle.
//
// # Safety
// `m` must be null or a live mesh handle.
size_t ut_mesh_triangle_count(const struct UtMesh *m);

// Axis-aligned bounds as `min[3]` followed by `max[3]`.
//
// # Safety
// `m` must be a live handle and `out6` point to six doubles.
enum UtStatus ut_mesh_bounds(const struct UtMesh *m, double *out6);

// Scale in place to `target_height_m`, resting on y = 0 and centred in x/z.
//
// # Safety
// `m` must be a live handle.
enum UtStatus ut_mesh_normalize(struct UtMesh *m, double target_height_m);

// Reduce in place to at most `target_triangles` triangles. The result keeps
// the current height and rests on y = 0.
//
// # Safety
// `m` must be a live handle.
enum UtStatus ut_mesh_decimate(struct UtMesh *m, size_t target_triangles);

// Serialize as OBJ text.
//
// # Safety
// `m` must be a live handle and `out_obj` valid.
enum UtStatus ut_mesh_to_obj(const struct UtMesh *m, char **out_obj);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* URBANTACTIC_H */
