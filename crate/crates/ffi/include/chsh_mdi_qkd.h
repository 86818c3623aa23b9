#ifndef CHSH_MDI_QKD_H
#define CHSH_MDI_QKD_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Success.
 */
#define QKD_OK 0

/**
 * A pointer argument was null or otherwise unusable.
 */
#define QKD_ERR_NULL_ARGUMENT 1

/**
 * The configuration text failed to parse or validate.
 */
#define QKD_ERR_INVALID_CONFIG 2

/**
 * The scan computation failed.
 */
#define QKD_ERR_COMPUTE 3

/**
 * An index was out of range.
 */
#define QKD_ERR_OUT_OF_RANGE 4

/**
 * The library panicked internally; the handle state is unchanged.
 */
#define QKD_ERR_INTERNAL 5

/**
 * Opaque parsed run configuration.
 */
typedef struct QkdConfig QkdConfig;

/**
 * Opaque distance-scan result.
 */
typedef struct QkdScan QkdScan;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Returns a pointer to a NUL-terminated description of the most recent
 * error on this thread. Valid until the next failing call on this thread.
 */
const char *qkd_last_error_message(void);

/**
 * Parses a key=value configuration document into a new handle.
 * Returns null on failure; the handle must be released with
 * `qkd_config_free`.
 */
struct QkdConfig *qkd_config_parse(const char *text);

/**
 * Releases a configuration handle. Passing null is a no-op.
 */
void qkd_config_free(struct QkdConfig *config);

/**
 * Runs the distance scan described by `config`. On success writes a new
 * scan handle to `out_scan` and returns `QKD_OK`; the handle must be
 * released with `qkd_scan_free`.
 */
int qkd_scan_run(const struct QkdConfig *config, struct QkdScan **out_scan);

/**
 * Releases a scan handle. Passing null is a no-op.
 */
void qkd_scan_free(struct QkdScan *scan);

/**
 * Number of distance points in the scan.
 */
int qkd_scan_len(const struct QkdScan *scan);

/**
 * Copies (distance_km, certified key rate per pulse pair) for point `index`
 * into the out parameters. Returns `QKD_OK` on success.
 */
int qkd_scan_point(const struct QkdScan *scan,
                   int index,
                   double *out_distance_km,
                   double *out_rate);

/**
 * Largest scanned distance with a strictly positive certified rate, or a
 * negative value if no point is secure. Returns NaN on error.
 */
double qkd_scan_secure_distance_km(const struct QkdScan *scan);

/**
 * The full scan as a NUL-terminated CSV document, owned by the scan handle.
 */
const char *qkd_scan_csv(const struct QkdScan *scan);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* CHSH_MDI_QKD_H */
