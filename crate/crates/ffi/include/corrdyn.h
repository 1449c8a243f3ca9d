#ifndef CORRDYN_H
#define CORRDYN_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CdStatus {
  CD_STATUS_OK = 0,
  CD_STATUS_NULL_ARGUMENT = 1,
  CD_STATUS_INVALID_INPUT = 2,
  CD_STATUS_NUMERIC_FAILURE = 3,
  CD_STATUS_INDEX_OUT_OF_RANGE = 4,
  CD_STATUS_PANIC = 5,
} CdStatus;

/*
 A weighted point cloud.
 */
typedef struct CdCloud CdCloud;

/*
 A correspondence on the Riemann sphere.
 */
typedef struct CdCorrespondence CdCorrespondence;

/*
 Periodic points of one period.
 */
typedef struct CdPeriodicSet CdPeriodicSet;

/*
 A point on the sphere in one of two charts: `chart` 0 uses `z`, chart 1
 uses `w = 1/z`.
 */
typedef struct CdPoint {
  uint8_t chart;
  double re;
  double im;
} CdPoint;

typedef struct CdPeriodicPoint {
  struct CdPoint point;
  size_t period;
  /*
   0 when the germ is vertical and the multiplier infinite.
   */
  uint8_t has_multiplier;
  double multiplier_re;
  double multiplier_im;
  size_t multiplicity;
  /*
   0 repelling, 1 attracting, 2 neutral.
   */
  uint8_t kind;
} CdPeriodicPoint;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or an empty string.
 The pointer stays valid until the next call into the library.
 */
const char *corrdyn_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *corrdyn_version(void);

/*
 Builds the correspondence `P(x, y) = Σ c_ij x^i y^j = 0` from
 `(deg_x + 1)(deg_y + 1)` coefficients, row-major by x-power.

 # Safety
 `re` and `im` must each point to that many doubles; `out` must be writable.
 */
enum CdStatus corrdyn_correspondence_new(size_t deg_x,
                                         size_t deg_y,
                                         const double *re,
                                         const double *im,
                                         struct CdCorrespondence **out);

/*
 # Safety
 `f` must be null or a handle from this library, freed at most once.
 */
void corrdyn_correspondence_free(struct CdCorrespondence *f);

/*
 `d1 = deg_y` and `d2 = deg_x` of the graph.

 # Safety
 Pointers must be valid.
 */
enum CdStatus corrdyn_correspondence_degrees(const struct CdCorrespondence *f,
                                             size_t *d1,
                                             size_t *d2);

/*
 `f ∘ g`: first `g`, then `f`.

 # Safety
 Pointers must be valid.
 */
enum CdStatus corrdyn_correspondence_compose(const struct CdCorrespondence *f,
                                             const struct CdCorrespondence *g,
                                             struct CdCorrespondence **out);

/*
 The `n`-th iterate, `n ≥ 1`.

 # Safety
 Pointers must be valid.
 */
enum CdStatus corrdyn_correspondence_iterate(const struct CdCorrespondence *f,
                                             size_t n,
                                             struct CdCorrespondence **out);

/*
 Cloud approximating `d⁻ⁿ (fⁿ)* δ_a` (`forward = 0`) or
 `d⁻ⁿ (fⁿ)_* δ_a` (`forward ≠ 0`) with at most about `max_atoms` atoms.

 # Safety
 Pointers must be valid.
 */
enum CdStatus corrdyn_cloud_new(const struct CdCorrespondence *f,
                                struct CdPoint a,
                                size_t n,
                                size_t max_atoms,
                                uint64_t seed,
                                uint8_t forward,
                                struct CdCloud **out);

/*
 # Safety
 `c` must be null or a handle from this library, freed at most once.
 */
void corrdyn_cloud_free(struct CdCloud *c);

/*
 Number of atoms; 0 for a null handle.

 # Safety
 `c` must be null or valid.
 */
size_t corrdyn_cloud_len(const struct CdCloud *c);

/*
 Atom `i`: its point and weight.

 # Safety
 Pointers must be valid.
 */
enum CdStatus corrdyn_cloud_atom(const struct CdCloud *c,
                                 size_t i,
                                 struct CdPoint *point,
                                 double *weight);

/*
 Mass within chordal distance `r` of `p`.

 # Safety
 Pointers must be valid.
 */
enum CdStatus corrdyn_cloud_mass_near(const struct CdCloud *c,
                                      struct CdPoint p,
                                      double r,
                                      double *out);

/*
 Dual-Lipschitz distance between two clouds on the degree-8 harmonic dictionary.

 # Safety
 Pointers must be valid.
 */
enum CdStatus corrdyn_cloud_distance(const struct CdCloud *a, const struct CdCloud *b, double *out);

/*
 Estimated norm of `d⁻¹f*` (`pushforward = 0`) or `d⁻¹f_*` on L²
 one-forms; `suspected` is set when it is within 0.02 of one.

 # Safety
 Pointers must be valid.
 */
enum CdStatus corrdyn_operator_norm(const struct CdCorrespondence *f,
                                    uint8_t pushforward,
                                    size_t iters,
                                    size_t resolution,
                                    uint64_t seed,
                                    double *norm,
                                    uint8_t *suspected);

/*
 Periodic points of period `n`.

 # Safety
 Pointers must be valid.
 */
enum CdStatus corrdyn_periodic_points(const struct CdCorrespondence *f,
                                      size_t n,
                                      struct CdPeriodicSet **out);

/*
 # Safety
 `s` must be null or a handle from this library, freed at most once.
 */
void corrdyn_periodic_free(struct CdPeriodicSet *s);

/*
 Number of rows (germs); 0 for a null handle.

 # Safety
 `s` must be null or valid.
 */
size_t corrdyn_periodic_len(const struct CdPeriodicSet *s);

/*
 Sum of multiplicities and number of diagonal factors removed.

 # Safety
 Pointers must be valid.
 */
enum CdStatus corrdyn_periodic_count(const struct CdPeriodicSet *s,
                                     size_t *count,
                                     size_t *diagonal_factors);

/*
 # Safety
 Pointers must be valid.
 */
enum CdStatus corrdyn_periodic_get(const struct CdPeriodicSet *s,
                                   size_t i,
                                   struct CdPeriodicPoint *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CORRDYN_H */
