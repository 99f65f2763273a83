#ifndef FLATMODEL_H
#define FLATMODEL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes of every `fm_*` call.
 */
typedef enum FmStatus {
  FM_STATUS_OK = 0,
  /**
   * A certificate was rejected, or an internal invariant failed.
   */
  FM_STATUS_VERIFY_FAILED = 1,
  /**
   * Malformed input or an instance outside the supported range.
   */
  FM_STATUS_INVALID = 2,
  /**
   * Search budget or precision ceiling reached.
   */
  FM_STATUS_EXHAUSTED = 3,
  FM_STATUS_NULL_POINTER = 4,
  /**
   * The library panicked; the handle should be discarded.
   */
  FM_STATUS_PANIC = 5,
} FmStatus;

/**
 * Opaque instance handle.
 */
typedef struct FmInstance FmInstance;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parse an instance file. On success `*out` owns a new handle.
 *
 * # Safety
 * `json` must be a valid C string and `out` a valid pointer.
 */
enum FmStatus fm_instance_from_json(const char *json, struct FmInstance **out);

/**
 * Release a handle. Null is ignored.
 *
 * # Safety
 * `h` must come from [`fm_instance_from_json`] and not be used afterwards.
 */
void fm_instance_free(struct FmInstance *h);

/**
 * Instance hash, profile and parameters as JSON.
 *
 * # Safety
 * `h` must be a live handle and `out` a valid pointer.
 */
enum FmStatus fm_describe_json(const struct FmInstance *h, char **out);

/**
 * All moduli points with IDs, Hermite exponents and ordinarity. Returns
 * [`FmStatus::Exhausted`] together with the partial list when the search
 * budget runs out.
 *
 * # Safety
 * `h` must be a live handle and `out` a valid pointer.
 */
enum FmStatus fm_enumerate_json(const struct FmInstance *h, char **out);

/**
 * Certificate joining the points with IDs `from` and `to`, as JSON.
 *
 * # Safety
 * `h` must be a live handle, `from` and `to` valid C strings, `out` a valid pointer.
 */
enum FmStatus fm_connect_json(const struct FmInstance *h,
                              const char *from,
                              const char *to,
                              char **out);

/**
 * Check a certificate. Returns [`FmStatus::Ok`] if it verifies and
 * [`FmStatus::VerifyFailed`] otherwise; the reason is in [`fm_last_error`].
 *
 * # Safety
 * `h` must be a live handle and `cert` a valid C string.
 */
enum FmStatus fm_verify_certificate(const struct FmInstance *h, const char *cert);

/**
 * Release a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from an `fm_*_json` call and not be used afterwards.
 */
void fm_string_free(char *s);

/**
 * Message of the last failed call on this thread, or an empty string. The
 * pointer stays valid until the next `fm_*` call on the same thread.
 */
const char *fm_last_error(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FLATMODEL_H */
