#ifndef FDI_FDI_H
#define FDI_FDI_H

/*
 * C interface to the frequency-domain PDE identification toolkit.
 *
 * Every function returns an fdi_status; on failure a message is available
 * from fdi_last_error() on the calling thread until the next call. Strings
 * returned through char** are owned by the caller and released with
 * fdi_string_free(). Fields are opaque and released with fdi_field_free().
 */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#if defined(FDI_BUILDING_LIBRARY)
#define FDI_API __declspec(dllexport)
#else
#define FDI_API __declspec(dllimport)
#endif
#else
#define FDI_API __attribute__((visibility("default")))
#endif

typedef enum fdi_status {
  FDI_OK = 0,
  FDI_ERR_INVALID_ARGUMENT = 1,
  FDI_ERR_FORMAT = 2,
  FDI_ERR_DEGENERATE_GRID = 3,
  FDI_ERR_UNSTABLE = 4,
  FDI_ERR_UNSUPPORTED = 5,
  FDI_ERR_DEGENERATE_SYSTEM = 6,
  FDI_ERR_IO = 7,
  FDI_ERR_INTERNAL = 8
} fdi_status;

typedef struct fdi_field fdi_field;

FDI_API const char* fdi_version(void);
FDI_API const char* fdi_status_string(fdi_status status);
/* Message of the last failed call on this thread, "" if none. */
FDI_API const char* fdi_last_error(void);
FDI_API void fdi_string_free(char* s);

/* Axis labels are the characters 'x', 'y', 'z', 't'; time must be last.
 * Samples are row-major with the time axis varying fastest. */
FDI_API fdi_status fdi_field_create(size_t rank, const size_t* dims, const double* spacings,
                                    const char* labels, const double* data, fdi_field** out);
FDI_API void fdi_field_free(fdi_field* f);
FDI_API fdi_status fdi_field_read(const char* path, fdi_field** out);
FDI_API fdi_status fdi_field_write(const fdi_field* f, const char* path);

FDI_API size_t fdi_field_rank(const fdi_field* f);
FDI_API size_t fdi_field_size(const fdi_field* f);
/* Each writes fdi_field_rank(f) entries. */
FDI_API fdi_status fdi_field_dims(const fdi_field* f, size_t* dims);
FDI_API fdi_status fdi_field_spacings(const fdi_field* f, double* spacings);
FDI_API fdi_status fdi_field_labels(const fdi_field* f, char* labels);
/* Borrowed pointer valid for the lifetime of f. */
FDI_API const double* fdi_field_data(const fdi_field* f);
FDI_API fdi_status fdi_field_stats(const fdi_field* f, double* mean, double* std, double* min, double* max);

/* JSON array of the built-in equation names. */
FDI_API fdi_status fdi_equation_names(char** json);

/* Reference solution of a catalog equation. grid_json may be NULL for the
 * catalog grid. sidecar_json receives the equation, grid and catalog version
 * and may be NULL. */
FDI_API fdi_status fdi_synth(const char* equation, const char* grid_json, fdi_field** out,
                             char** sidecar_json);

/* u + alpha * std(u) * g with g from the counter-based generator. */
FDI_API fdi_status fdi_inject_noise(const fdi_field* f, double alpha, uint64_t seed, fdi_field** out);

/* Effective default pipeline for data of the given spatial rank. */
FDI_API fdi_status fdi_default_config(size_t spatial_dims, int noisy, char** json);

/* config_json (may be NULL) is merged over fdi_default_config(rank, noisy)
 * where "noisy" is an optional boolean member of config_json (default
 * false). Writes the identification result with the effective config. */
FDI_API fdi_status fdi_identify(const fdi_field* f, const char* config_json, char** result_json);

/* Benchmark runners. options_json members:
 *   equation  catalog name or equation object (required unless the sidecar
 *             of "input" provides one)
 *   input     optional bundle path used instead of the catalog solution
 *   grid      optional grid object for the catalog solution
 *   alphas    ascending noise levels
 *   trials, seed, jobs
 *   config    pipeline members merged over the per-alpha defaults
 *   csv       optional output path for the tabular report
 *   journal   optional JSON-lines resume file (sweep only)
 *   methods   optional [{label, domain, cutoff}] (compare only) */
FDI_API fdi_status fdi_sweep(const char* options_json, char** report_json);
FDI_API fdi_status fdi_compare(const char* options_json, char** report_json);
FDI_API fdi_status fdi_csr_vs_stlm(const char* options_json, char** report_json);

#ifdef __cplusplus
}
#endif

#endif
