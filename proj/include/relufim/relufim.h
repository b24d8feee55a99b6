/* Stable C interface to the relufim core. Every function returns an
 * rf_status; on failure rf_last_error() describes the problem for the
 * calling thread. Handles are opaque and owned by the caller. */
#ifndef RELUFIM_H
#define RELUFIM_H

#include <stddef.h>
#include <stdint.h>

#if defined(RELUFIM_BUILDING_LIBRARY)
#define RELUFIM_API __attribute__((visibility("default")))
#else
#define RELUFIM_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rf_status {
  RF_OK = 0,
  RF_ERR_INVALID_ARGUMENT = 1,
  RF_ERR_DOMAIN = 2,
  RF_ERR_CAPACITY = 3,
  RF_ERR_NOT_CONVERGED = 4,
  RF_ERR_MISMATCH = 5,
  RF_ERR_IO = 6,
  RF_ERR_INTERNAL = 7
} rf_status;

typedef enum rf_source {
  RF_SOURCE_CLOSED = 0,
  RF_SOURCE_SERIES = 1,
  RF_SOURCE_EMPIRICAL = 2,
  RF_SOURCE_APPROX = 3,
  RF_SOURCE_RESIDUAL = 4
} rf_source;

typedef struct rf_weights rf_weights;
typedef struct rf_kernel rf_kernel;
typedef struct rf_basis rf_basis;
typedef struct rf_spectrum rf_spectrum;
typedef struct rf_certificate rf_certificate;

RELUFIM_API const char* rf_version(void);
RELUFIM_API const char* rf_last_error(void);
RELUFIM_API const char* rf_status_name(rf_status status);
/* Worker threads for parallel kernels; n = 0 keeps the runtime default. */
RELUFIM_API rf_status rf_set_threads(int n);

/* Weights: d x p, entries N(0, 1/p), drawn from a reproducible stream. */
RELUFIM_API rf_status rf_weights_generate(size_t d, size_t p, uint64_t seed, rf_weights** out);
RELUFIM_API rf_status rf_weights_load(const char* path, rf_weights** out);
RELUFIM_API rf_status rf_weights_save(const rf_weights* w, const char* path);
RELUFIM_API rf_status rf_weights_write_csv(const rf_weights* w, const char* path);
RELUFIM_API rf_status rf_weights_info(const rf_weights* w, size_t* d, size_t* p, uint64_t* seed);
RELUFIM_API rf_status rf_weights_entry(const rf_weights* w, size_t row, size_t col, double* out);
RELUFIM_API void rf_weights_free(rf_weights* w);

typedef struct rf_build_options {
  rf_source source;
  size_t series_terms;  /* series and residual truncation N */
  uint64_t samples;     /* empirical n */
  uint64_t sample_seed; /* empirical feature stream seed */
  double sigma2;
  size_t workers;
  size_t dense_cap;     /* refuse dense p x p storage above this p */
} rf_build_options;

RELUFIM_API void rf_build_options_init(rf_build_options* options);
RELUFIM_API rf_status rf_source_parse(const char* name, rf_source* out);
RELUFIM_API const char* rf_source_name(rf_source source);

RELUFIM_API rf_status rf_kernel_build(const rf_weights* w, const rf_build_options* options, rf_kernel** out);
RELUFIM_API rf_status rf_kernel_load(const char* path, rf_kernel** out);
RELUFIM_API rf_status rf_kernel_save(const rf_kernel* k, const char* path);
RELUFIM_API rf_status rf_kernel_info(const rf_kernel* k, size_t* d, size_t* p, uint64_t* seed, rf_source* source,
                                     double* tail_bound);
RELUFIM_API rf_status rf_kernel_entry(const rf_kernel* k, size_t i, size_t j, double* out);
RELUFIM_API rf_status rf_kernel_trace(const rf_kernel* k, double* out);
/* max_ij |a_ij - b_ij|; the two matrices must share p. */
RELUFIM_API rf_status rf_kernel_max_abs_diff(const rf_kernel* a, const rf_kernel* b, double* out);
RELUFIM_API void rf_kernel_free(rf_kernel* k);

RELUFIM_API rf_status rf_basis_build(const rf_weights* w, rf_basis** out);
RELUFIM_API rf_status rf_basis_size(const rf_basis* b, size_t* out);
RELUFIM_API void rf_basis_free(rf_basis* b);

/* Full dense spectrum. With consume != 0 the kernel storage is handed to
 * the eigensolver and the kernel handle is left empty. The basis, when
 * given, adds principal angles against the predicted eigenspaces. */
RELUFIM_API rf_status rf_spectrum_dense(rf_kernel* k, int consume, const rf_basis* b, rf_spectrum** out);
/* Top-k eigenvalues by Lanczos on the matrix-free closed-form or
 * approximate operator built from the weights. */
RELUFIM_API rf_status rf_spectrum_topk(const rf_weights* w, rf_source source, size_t k, uint64_t seed, double tol,
                                       rf_spectrum** out);
RELUFIM_API rf_status rf_spectrum_count(const rf_spectrum* s, size_t* out);
RELUFIM_API rf_status rf_spectrum_value(const rf_spectrum* s, size_t rank, double* out);
/* group in 0..3: size and mean of the group; reference level for 0..2. */
RELUFIM_API rf_status rf_spectrum_group(const rf_spectrum* s, int group, size_t* size, double* mean);
RELUFIM_API rf_status rf_spectrum_reference(const rf_spectrum* s, int group, double* out);
/* edge in 0..2; RF_ERR_DOMAIN when the ratio is undefined. */
RELUFIM_API rf_status rf_spectrum_gap_ratio(const rf_spectrum* s, int edge, double* out);
RELUFIM_API rf_status rf_spectrum_write_csv(const rf_spectrum* s, const char* path);
/* extra_json: NULL or a JSON object merged into the summary. */
RELUFIM_API rf_status rf_spectrum_write_json(const rf_spectrum* s, const char* path, const char* extra_json);
RELUFIM_API void rf_spectrum_free(rf_spectrum* s);

typedef struct rf_certify_options {
  double delta;
  int use_observed; /* certify at the observed delta* instead of delta */
  double eta;
  double c;
  int literal_xi;
} rf_certify_options;

RELUFIM_API void rf_certify_options_init(rf_certify_options* options);
RELUFIM_API rf_status rf_xi(size_t d, double eta, int literal, double* out);
/* Without a kernel the quotients and trace come from the closed form,
 * evaluated matrix-free. */
RELUFIM_API rf_status rf_certify(const rf_weights* w, const rf_kernel* k, const rf_certify_options* options,
                                 rf_certificate** out);
RELUFIM_API rf_status rf_certificate_summary(const rf_certificate* c, int* all_pass, size_t* failures,
                                             double* delta, double* delta_star);
RELUFIM_API rf_status rf_certificate_check_count(const rf_certificate* c, size_t* out);
/* claim points into the certificate and stays valid until it is freed. */
RELUFIM_API rf_status rf_certificate_check(const rf_certificate* c, size_t index, const char** claim, double* lhs,
                                           double* rhs, int* pass);
RELUFIM_API rf_status rf_certificate_write_json(const rf_certificate* c, const char* path, const char* extra_json);
RELUFIM_API rf_status rf_certificate_write_csv(const rf_certificate* c, const char* path);
RELUFIM_API void rf_certificate_free(rf_certificate* c);

#ifdef __cplusplus
}
#endif

#endif
