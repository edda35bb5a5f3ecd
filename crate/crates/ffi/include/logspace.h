#ifndef LOGSPACE_H
#define LOGSPACE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status returned by every fallible call.
typedef enum LsStatus {
  LS_STATUS_OK = 0,
  LS_STATUS_INVALID_PARAMETER = 1,
  LS_STATUS_REDUCIBLE_MODULUS = 2,
  LS_STATUS_FIELD_MISMATCH = 3,
  LS_STATUS_NEEDS_LARGER_FIELD = 4,
  LS_STATUS_PRECONDITION = 5,
  LS_STATUS_NOT_INVERTIBLE = 6,
  LS_STATUS_PARSE = 7,
  LS_STATUS_IO = 8,
  LS_STATUS_INTERNAL = 9,
  LS_STATUS_NULL_POINTER = 10,
  LS_STATUS_PANIC = 11,
} LsStatus;

// A finite field `F_{p^k}`.
typedef struct LsField LsField;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. The pointer is
// valid until the next call into the library from the same thread.
const char *ls_last_error(void);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not have been freed already.
void ls_string_free(char *s);

// Builds `F_{p^k}` from the shipped modulus table (or the table named by
// the `LOGSPACE_FIELD_TABLE` environment variable).
//
// # Safety
// `out` must be a valid pointer.
enum LsStatus ls_field_new(uint32_t p, uint32_t k, struct LsField **out);

// # Safety
// `f` must come from [`ls_field_new`] and not have been freed already.
void ls_field_free(struct LsField *f);

// Number of elements, or 0 for a null handle.
//
// # Safety
// `f` must be null or a live handle.
uint32_t ls_field_order(const struct LsField *f);

// # Safety
// `f` must be a live handle and `out` a valid pointer.
enum LsStatus ls_field_add(const struct LsField *f, uint32_t a, uint32_t b, uint32_t *out);

// # Safety
// `f` must be a live handle and `out` a valid pointer.
enum LsStatus ls_field_mul(const struct LsField *f, uint32_t a, uint32_t b, uint32_t *out);

// # Safety
// `f` must be a live handle and `out` a valid pointer.
enum LsStatus ls_field_inv(const struct LsField *f, uint32_t a, uint32_t *out);

// Parses element syntax such as `t^2+2t+1`.
//
// # Safety
// `f` must be a live handle, `s` a nul-terminated string and `out` valid.
enum LsStatus ls_field_parse(const struct LsField *f, const char *s, uint32_t *out);

// # Safety
// `f` must be a live handle and `out` a valid pointer.
enum LsStatus ls_field_format(const struct LsField *f, uint32_t a, char **out);

// Validates a space record; writes the validation report as JSON.
//
// # Safety
// `space_json` must be a nul-terminated string and `out` valid.
enum LsStatus ls_validate_space_json(const char *space_json, char **out);

// Builds the additive-polynomial space from `n` random independent
// generators (seeded); writes the space record.
//
// # Safety
// `out` must be a valid pointer.
enum LsStatus ls_construct_matignon_json(uint32_t p,
                                         uint32_t k,
                                         uint32_t n,
                                         uint64_t seed,
                                         char **out);

// Builds a random characteristic-two space with `3n` poles over
// `F_{2^k}`; writes the space record.
//
// # Safety
// `out` must be a valid pointer.
enum LsStatus ls_construct_p2_json(uint32_t k, uint32_t n, uint64_t seed, char **out);

// Writes `{"form", "cartier", "fixed", "logarithmic", "derivative_criterion",
// "residue_criterion"}` for a form record over `F_{p^k}`.
//
// # Safety
// `form_json` must be a nul-terminated string and `out` valid.
enum LsStatus ls_cartier_json(uint32_t p, uint32_t k, const char *form_json, char **out);

// Writes the coefficient-identity report for `(p, n)`.
//
// # Safety
// `out` must be a valid pointer.
enum LsStatus ls_lemma210_json(uint32_t p, uint32_t n, char **out);

// Runs the two-dimensional existence check for `p`, `2p`, `3p` poles over
// `F_{p^k}`, `k <= k_max`; writes the report. `jobs = 0` uses all cores.
//
// # Safety
// `out` must be a valid pointer.
enum LsStatus ls_theorem29_json(uint32_t p,
                                uint32_t k_max,
                                bool long_run,
                                uint32_t jobs,
                                char **out);

// Runs the command-line tool on `argv[0..argc]` (without the program
// name) and writes its JSON-lines output to `out`. Returns the process
// exit status (0, 1 or 2), or -1 when the arguments are unusable.
//
// # Safety
// `argv` must hold `argc` nul-terminated strings and `out` be valid.
int ls_run(int argc, const char *const *argv, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LOGSPACE_H */
