#ifndef OPPNET_H
#define OPPNET_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum OppnetClass {
  OPPNET_CLASS_OPPONENT = 0,
  OPPNET_CLASS_NON_OPPONENT = 1,
  OPPNET_CLASS_UNRESPONSIVE = 2,
} OppnetClass;

typedef enum OppnetStatus {
  OPPNET_STATUS_OK = 0,
  OPPNET_STATUS_NULL_POINTER = 1,
  OPPNET_STATUS_INVALID_ARGUMENT = 2,
  OPPNET_STATUS_SHAPE = 3,
  OPPNET_STATUS_NON_FINITE = 4,
  OPPNET_STATUS_UNDEFINED_AT_KINK = 5,
  OPPNET_STATUS_BAD_MAGIC = 6,
  OPPNET_STATUS_UNSUPPORTED_VERSION = 7,
  OPPNET_STATUS_TRUNCATED = 8,
  OPPNET_STATUS_METADATA = 9,
  OPPNET_STATUS_DATASET = 10,
  OPPNET_STATUS_IO = 11,
  OPPNET_STATUS_PANIC = 12,
} OppnetStatus;

/**
 * Opaque network handle.
 */
typedef struct OppnetNetwork OppnetNetwork;

/**
 * Mirror of the architecture description.
 */
typedef struct OppnetArchitecture {
  size_t bottleneck_width;
  size_t ventral_depth;
  size_t input_channels;
  size_t base_channels;
  size_t kernel_size;
  size_t hidden_units;
  size_t num_classes;
  size_t input_size;
} OppnetArchitecture;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until
 * the next call into the library on the same thread.
 */
const char *oppnet_last_error_message(void);

/**
 * Static description of a status code.
 */
const char *oppnet_status_message(enum OppnetStatus status);

/**
 * # Safety
 * `out` must point to writable memory for one `OppnetArchitecture`.
 */
enum OppnetStatus oppnet_architecture_default(struct OppnetArchitecture *out);

/**
 * Xavier-initialised network. On success `*out` owns a new handle.
 *
 * # Safety
 * `arch` must be readable and `out` writable.
 */
enum OppnetStatus oppnet_network_build(const struct OppnetArchitecture *arch,
                                       uint64_t seed,
                                       struct OppnetNetwork **out);

/**
 * # Safety
 * `path` must be a nul-terminated string and `out` writable.
 */
enum OppnetStatus oppnet_network_load(const char *path, struct OppnetNetwork **out);

/**
 * # Safety
 * `net` must be a live handle and `path` a nul-terminated string.
 */
enum OppnetStatus oppnet_network_save(const struct OppnetNetwork *net, const char *path);

/**
 * Release a handle. Null is ignored.
 *
 * # Safety
 * `net` must be null or a handle not yet freed.
 */
void oppnet_network_free(struct OppnetNetwork *net);

/**
 * # Safety
 * `net` must be a live handle and `out` writable.
 */
enum OppnetStatus oppnet_network_architecture(const struct OppnetNetwork *net,
                                              struct OppnetArchitecture *out);

/**
 * Number of conv layers; layer indices below are `0..count`.
 *
 * # Safety
 * `net` must be a live handle and `out` writable.
 */
enum OppnetStatus oppnet_network_conv_layer_count(const struct OppnetNetwork *net, size_t *out);

/**
 * Output channels of conv layer `layer`.
 *
 * # Safety
 * `net` must be a live handle and `out` writable.
 */
enum OppnetStatus oppnet_network_layer_channels(const struct OppnetNetwork *net,
                                                size_t layer,
                                                size_t *out);

/**
 * HSL to RGB, writing three values to `rgb`.
 *
 * # Safety
 * `rgb` must have room for three doubles.
 */
enum OppnetStatus oppnet_hsl_to_rgb(double h, double s, double l, double *rgb);

/**
 * d(R, G, B)/dh in per-degree units. Fails with
 * `OPPNET_STATUS_UNDEFINED_AT_KINK` at multiples of 60°.
 *
 * # Safety
 * `out` must have room for three doubles.
 */
enum OppnetStatus oppnet_hue_jacobian(double h, double s, double l, double *out);

/**
 * Classify `n` responses against `baseline`.
 *
 * # Safety
 * `responses` must hold `n` floats and `out` be writable.
 */
enum OppnetStatus oppnet_classify_responses(const float *responses,
                                            size_t n,
                                            float baseline,
                                            enum OppnetClass *out);

/**
 * Responses of one cell to the 360 integer hues. `pre` and `post` each
 * receive 360 floats; the baselines receive the black-input response.
 *
 * # Safety
 * `net` must be a live handle; every output pointer must be writable.
 */
enum OppnetStatus oppnet_probe_hue_curve(const struct OppnetNetwork *net,
                                         size_t layer,
                                         size_t channel,
                                         size_t row,
                                         size_t col,
                                         float *pre,
                                         float *post,
                                         float *baseline_pre,
                                         float *baseline_post);

/**
 * d(summed post-activation of `layer`)/dh at each of `n` hues. Points
 * within 0.5° of a multiple of 60° get `NaN` and `undefined[i] = 1`.
 *
 * # Safety
 * `net` must be a live handle; `hues`, `values` and `undefined` must each
 * hold `n` elements.
 */
enum OppnetStatus oppnet_hue_sensitivity(const struct OppnetNetwork *net,
                                         size_t layer,
                                         const double *hues,
                                         size_t n,
                                         double *values,
                                         uint8_t *undefined);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OPPNET_H */
