#ifndef LDL_H
#define LDL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of a library call.
typedef enum LdlStatus {
  LDL_STATUS_OK = 0,
  LDL_STATUS_INVALID_INPUT = 1,
  LDL_STATUS_PARSE = 2,
  LDL_STATUS_SCENARIO_MISMATCH = 3,
  LDL_STATUS_ZERO_EFFICIENCY = 4,
  LDL_STATUS_INCONSISTENT_EFFICIENCIES = 5,
  LDL_STATUS_SIZE_OVERFLOW = 6,
  LDL_STATUS_SIGNALLING_INPUT = 7,
  LDL_STATUS_ZERO_ETA_MIN = 8,
  LDL_STATUS_DEGENERATE_TAU = 9,
  LDL_STATUS_NO_FEASIBLE_SAMPLE = 10,
  LDL_STATUS_IO = 11,
  // A required pointer argument was null.
  LDL_STATUS_NULL_POINTER = 12,
  // A string argument was not valid UTF-8.
  LDL_STATUS_INVALID_UTF8 = 13,
  // The library panicked; this is a bug.
  LDL_STATUS_INTERNAL = 14,
} LdlStatus;

// A postselected correlation with floating-point entries.
typedef struct LdlCorrelation LdlCorrelation;

// Outcome of a membership check.
typedef struct LdlMembership LdlMembership;

// Result of evaluating the two-party LDL inequality.
typedef struct LdlEq5Result {
  // Left-hand side; violated when positive beyond the tolerance.
  double lhs;
  bool violated;
} LdlEq5Result;

// MDL parameters obtained from LDL bounds.
typedef struct LdlMdlResult {
  double l;
  double h;
  // Set when a value had to be clamped into [0, 1].
  bool clamped;
} LdlMdlResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null after a success.
// Valid until the next library call on this thread.
const char *ldl_last_error_message(void);

// Releases a string returned by the library. Null is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void ldl_string_free(char *s);

// Parses a correlation document. Full tables are postselected.
//
// # Safety
// `json` must be a nul-terminated string and `out` a valid pointer.
enum LdlStatus ldl_correlation_from_json(const char *json, struct LdlCorrelation **out);

// Hardy correlation for `tau` in (0, 1).
//
// # Safety
// `out` must be a valid pointer.
enum LdlStatus ldl_hardy_correlation(double tau, struct LdlCorrelation **out);

// Releases a correlation. Null is ignored.
//
// # Safety
// `c` must come from this library and not have been freed.
void ldl_correlation_free(struct LdlCorrelation *c);

// Number of parties of a correlation.
//
// # Safety
// `c` must be a valid handle.
size_t ldl_correlation_parties(const struct LdlCorrelation *c);

// `P(a|x)` with one input and one outcome per party, `n` parties.
//
// # Safety
// `x` and `a` must point to `n` values and `value` must be valid.
enum LdlStatus ldl_correlation_get(const struct LdlCorrelation *c,
                                   const size_t *x,
                                   const size_t *a,
                                   size_t n,
                                   double *value);

// Serializes a correlation to JSON. Free the result with [`ldl_string_free`].
//
// # Safety
// `c` must be a valid handle and `out` a valid pointer.
enum LdlStatus ldl_correlation_to_json(const struct LdlCorrelation *c, char **out);

// Evaluates the two-party binary LDL inequality at the given bounds.
// A negative `tol` selects the default.
//
// # Safety
// `c` must be a valid handle and `out` a valid pointer.
enum LdlStatus ldl_eval_eq5(const struct LdlCorrelation *c,
                            double eta_min,
                            double eta_max,
                            double tol,
                            struct LdlEq5Result *out);

// Decides membership from JSON documents, as `ldl membership` does.
// `effs_json` may be null for full targets. Exact inputs are solved in
// rational arithmetic, as is everything when `exact` is nonzero.
//
// # Safety
// String arguments must be nul-terminated (or null where allowed) and `out`
// a valid pointer.
enum LdlStatus ldl_membership_check(const char *target_json,
                                    const char *effs_json,
                                    const char *bounds_json,
                                    double tol,
                                    int exact,
                                    struct LdlMembership **out);

// Whether the target is a member.
//
// # Safety
// `m` must be a valid handle.
bool ldl_membership_is_member(const struct LdlMembership *m);

// Verdict JSON with witness or certificate, owned by the handle.
//
// # Safety
// `m` must be a valid handle.
const char *ldl_membership_json(const struct LdlMembership *m);

// Releases a membership result. Null is ignored.
//
// # Safety
// `m` must come from this library and not have been freed.
void ldl_membership_free(struct LdlMembership *m);

// Maps MDL parameters `(l, h)` through LDL bounds.
//
// # Safety
// `out` must be a valid pointer.
enum LdlStatus ldl_to_mdl_params(double l,
                                 double h,
                                 size_t n_inputs,
                                 double eta_min,
                                 double eta_max,
                                 bool joint,
                                 struct LdlMdlResult *out);

// Whether the MDL nonlocality condition holds for the mapped parameters.
//
// # Safety
// `out` must be a valid pointer.
enum LdlStatus ldl_mdl_condition(double eta_min,
                                 double eta_max,
                                 size_t n_inputs,
                                 double l,
                                 double h,
                                 bool *out);

// Number of LDL vertices for `n` parties with the given input and outcome
// counts and per-party bounds `[eta_min[i], eta_max[i]]`.
//
// # Safety
// The four arrays must hold `n` values and `out` must be valid.
enum LdlStatus ldl_vertex_count(const size_t *inputs,
                                const size_t *outcomes,
                                const double *eta_min,
                                const double *eta_max,
                                size_t n,
                                uint64_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LDL_H */
