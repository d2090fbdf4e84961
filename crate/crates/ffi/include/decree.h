#ifndef DECREE_H
#define DECREE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DecreeStatus {
  DECREE_STATUS_OK = 0,
  DECREE_STATUS_NULL_ARGUMENT = 1,
  DECREE_STATUS_INVALID_UTF8 = 2,
  DECREE_STATUS_PARSE_ERROR = 3,
  DECREE_STATUS_NOT_FOUND = 4,
  DECREE_STATUS_PIPELINE_ERROR = 5,
  DECREE_STATUS_DIFFTEST_ERROR = 6,
  DECREE_STATUS_PANIC = 7,
} DecreeStatus;

/**
 * An owned, validated app model.
 */
typedef struct DecreeModel DecreeModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *decree_version(void);

/**
 * FNV-1a 64 of `len` bytes at `data`. A null `data` hashes as empty.
 *
 * # Safety
 * `data` must point to `len` readable bytes unless it is null.
 */
uint64_t decree_fnv1a64(const uint8_t *data, size_t len);

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call into the library on this thread.
 */
const char *decree_last_error_message(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library, freed only once.
 */
void decree_string_free(char *s);

/**
 * Parses and validates an app model document.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum DecreeStatus decree_model_parse(const char *json, struct DecreeModel **out);

/**
 * # Safety
 * `model` must be null or a handle from [`decree_model_parse`], freed only once.
 */
void decree_model_free(struct DecreeModel *model);

/**
 * Canonical text of the model.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum DecreeStatus decree_model_serialize(const struct DecreeModel *model, char **out);

/**
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum DecreeStatus decree_model_content_id(const struct DecreeModel *model, uint64_t *out);

/**
 * Number of callbacks, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t decree_model_callback_count(const struct DecreeModel *model);

/**
 * Canonical hash of the named callback.
 *
 * # Safety
 * `model` must be a live handle, `name` NUL-terminated, `out` writable.
 */
enum DecreeStatus decree_model_callback_hash(const struct DecreeModel *model,
                                             const char *name,
                                             uint64_t *out);

/**
 * Differentially tests two models under the default environment and
 * writes the report JSON to `report_out`. When `technique_manifest` is not
 * null, its OS policy and runtime settings apply to the instrumented side.
 *
 * # Safety
 * Both handles must be live; `technique_manifest` null or NUL-terminated;
 * `report_out` writable.
 */
enum DecreeStatus decree_difftest(const struct DecreeModel *original,
                                  const struct DecreeModel *instrumented,
                                  const char *technique_manifest,
                                  bool force_all,
                                  char **report_out);

/**
 * Canonical form of a test script.
 *
 * # Safety
 * `script` must be NUL-terminated; `out` must be writable.
 */
enum DecreeStatus decree_script_format(const char *script, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DECREE_H */
