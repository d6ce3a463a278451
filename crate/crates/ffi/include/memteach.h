/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef MEMTEACH_H
#define MEMTEACH_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MtModel {
  // One parameter point shared by all items.
  MT_MODEL_EF = 0,
  // One parameter point per item.
  MT_MODEL_ISEF = 1,
} MtModel;

typedef enum MtStatus {
  MT_STATUS_OK = 0,
  MT_STATUS_NULL_POINTER = 1,
  MT_STATUS_INVALID_ARGUMENT = 2,
  MT_STATUS_CONFIG = 3,
  MT_STATUS_TIME_WENT_BACKWARDS = 4,
  MT_STATUS_UNSEEN_ITEM = 5,
  MT_STATUS_UNKNOWN_ITEM = 6,
  MT_STATUS_DEGENERATE_POSTERIOR = 7,
  MT_STATUS_PANIC = 8,
  MT_STATUS_INTERNAL = 9,
} MtStatus;

typedef enum MtTeacherKind {
  MT_TEACHER_KIND_LEITNER = 0,
  MT_TEACHER_KIND_MYOPIC = 1,
  MT_TEACHER_KIND_CONSERVATIVE = 2,
} MtTeacherKind;

// Posterior belief over one item's forgetting parameters.
typedef struct MtBelief MtBelief;

// Standalone Leitner box state.
typedef struct MtLeitner MtLeitner;

// Session timetable plus evaluation time.
typedef struct MtSchedule MtSchedule;

// A teacher with its own psychologist and item histories.
typedef struct MtTeacher MtTeacher;

// Parameter grid: `alpha_points` log-spaced values in `[alpha_low,
// alpha_high]` times `beta_points` evenly spaced values in `[beta_low,
// beta_high]`.
typedef struct MtGrid {
  size_t alpha_points;
  double alpha_low;
  double alpha_high;
  size_t beta_points;
  double beta_low;
  double beta_high;
} MtGrid;

typedef struct MtSelection {
  uint32_t item;
  bool first_presentation;
  double predicted_recall;
} MtSelection;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or null. Valid until the
// next failing call on the same thread.
const char *mt_last_error_message(void);

// Library version, a static NUL-terminated string.
const char *mt_version(void);

// The default 100 x 100 grid.
struct MtGrid mt_grid_default(void);

// Recall probability `exp(-alpha (1 - beta)^(n - 1) (now - last))`.
//
// # Safety
// `out` must be null or valid for writes.
enum MtStatus mt_recall_probability(uint32_t n_presentations,
                                    double last_presentation,
                                    double alpha,
                                    double beta,
                                    double now,
                                    double *out);

// Uniform belief on `grid`.
//
// # Safety
// `grid` must be null or point to an `MtGrid`; `out` must be null or valid
// for writes.
enum MtStatus mt_belief_new(const struct MtGrid *grid, struct MtBelief **out);

// # Safety
// `belief` must be null or a handle from [`mt_belief_new`] not yet freed.
void mt_belief_free(struct MtBelief *belief);

// Number of grid points.
//
// # Safety
// `belief` must be a live handle; `out` valid for writes.
enum MtStatus mt_belief_len(const struct MtBelief *belief, size_t *out);

// Bayes update with one recall outcome. The item must have been presented
// before (`n_presentations >= 1`).
//
// # Safety
// `belief` must be a live handle.
enum MtStatus mt_belief_update(struct MtBelief *belief,
                               uint32_t n_presentations,
                               double last_presentation,
                               bool outcome,
                               double now);

// Posterior expected recall.
//
// # Safety
// `belief` must be a live handle; `out` valid for writes.
enum MtStatus mt_belief_expected_recall(const struct MtBelief *belief,
                                        uint32_t n_presentations,
                                        double last_presentation,
                                        double now,
                                        double *out);

// Posterior means of alpha and beta.
//
// # Safety
// `belief` must be a live handle; `alpha` and `beta` valid for writes.
enum MtStatus mt_belief_posterior_mean(const struct MtBelief *belief, double *alpha, double *beta);

// `days` sessions one day apart, each of `iterations` questions lasting
// `iteration_seconds`; evaluation one day after the last session.
//
// # Safety
// `out` must be valid for writes.
enum MtStatus mt_schedule_daily(size_t days,
                                uint32_t iterations,
                                double iteration_seconds,
                                struct MtSchedule **out);

// Total number of steps.
//
// # Safety
// `schedule` must be a live handle; `out` valid for writes.
enum MtStatus mt_schedule_horizon(const struct MtSchedule *schedule, size_t *out);

// Wall time of `step`.
//
// # Safety
// `schedule` must be a live handle; `out` valid for writes.
enum MtStatus mt_schedule_step_time(const struct MtSchedule *schedule, size_t step, double *out);

// # Safety
// `schedule` must be null or a live handle.
void mt_schedule_free(struct MtSchedule *schedule);

// Teacher over items `0..item_count` with a grid-Bayesian psychologist.
// `kind` is an [`MtTeacherKind`] value and `model` an [`MtModel`] value.
// Leitner teachers use the default delays (4 s, doubling).
//
// # Safety
// `grid` must point to an `MtGrid`; `out` valid for writes.
enum MtStatus mt_teacher_new(uint32_t kind,
                             uint32_t model,
                             uint32_t item_count,
                             const struct MtGrid *grid,
                             double rho,
                             uint64_t seed,
                             struct MtTeacher **out);

// # Safety
// `teacher` must be null or a live handle.
void mt_teacher_free(struct MtTeacher *teacher);

// Chooses the item for `step` of `schedule`, presented at `now`.
//
// # Safety
// Handles must be live; `out` valid for writes.
enum MtStatus mt_teacher_select(struct MtTeacher *teacher,
                                const struct MtSchedule *schedule,
                                size_t step,
                                double now,
                                struct MtSelection *out);

// Records the outcome of presenting `item` at `now`.
//
// # Safety
// `teacher` must be a live handle.
enum MtStatus mt_teacher_observe(struct MtTeacher *teacher,
                                 uint32_t item,
                                 bool outcome,
                                 double now);

// The teacher's predicted recall of a presented item at `now`.
//
// # Safety
// `teacher` must be a live handle; `out` valid for writes.
enum MtStatus mt_teacher_predict(const struct MtTeacher *teacher,
                                 uint32_t item,
                                 double now,
                                 double *out);

// Number of items presented at least once.
//
// # Safety
// `teacher` must be a live handle; `out` valid for writes.
enum MtStatus mt_teacher_seen_count(const struct MtTeacher *teacher, size_t *out);

// Leitner boxes over items `0..item_count`; item `k` is due
// `delta_a * delta_b^box` seconds after its last review.
//
// # Safety
// `out` must be valid for writes.
enum MtStatus mt_leitner_new(uint32_t item_count,
                             double delta_a,
                             double delta_b,
                             uint64_t seed,
                             struct MtLeitner **out);

// # Safety
// `state` must be null or a live handle.
void mt_leitner_free(struct MtLeitner *state);

// # Safety
// `state` must be a live handle; `item` valid for writes.
enum MtStatus mt_leitner_select(struct MtLeitner *state, double now, size_t step, uint32_t *item);

// # Safety
// `state` must be a live handle.
enum MtStatus mt_leitner_update(struct MtLeitner *state, uint32_t item, bool outcome, double now);

// Box index of `item`, or -1 when it has not been presented.
//
// # Safety
// `state` must be a live handle; `out` valid for writes.
enum MtStatus mt_leitner_box(const struct MtLeitner *state, uint32_t item, int64_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MEMTEACH_H */
