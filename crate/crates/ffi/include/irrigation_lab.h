#ifndef IRRIGATION_LAB_H
#define IRRIGATION_LAB_H

#pragma once

#include <stdint.h>
#include <stddef.h>
#include <stdbool.h>

// Result code of every fallible call.
typedef enum IrrStatus {
  IRR_STATUS_OK = 0,
  IRR_STATUS_NULL_POINTER = 1,
  IRR_STATUS_INVALID_PARAMETER = 2,
  IRR_STATUS_INVALID_LAW = 3,
  IRR_STATUS_OUT_OF_RANGE = 4,
  IRR_STATUS_BUFFER_TOO_SMALL = 5,
  IRR_STATUS_FAILED = 6,
  IRR_STATUS_PANIC = 7,
} IrrStatus;

// Sampled irrigation digraph.
typedef struct IrrGraph IrrGraph;

// Sampled points on the unit torus.
typedef struct IrrPoints IrrPoints;

// Connected-component census of the undirected view.
typedef struct IrrCensus {
  size_t c1;
  size_t c2;
  size_t components;
  size_t edges;
} IrrCensus;

// Message for the last failing call on this thread, or NULL. Valid until the
// next failing call on the same thread.
const char *irr_last_error(void);

// Library version as a static NUL-terminated string.
const char *irr_version(void);

// Sample `n` uniform points. `*out` receives a handle to free with
// `irr_points_free`.
//
// # Safety
// `out` must be valid for writes.
enum IrrStatus irr_points_sample(size_t n, uint64_t seed, struct IrrPoints **out);

// Build a point set from `n` interleaved `x, y` coordinates in [0,1).
//
// # Safety
// `xy` must point to `2 * n` doubles; `out` must be valid for writes.
enum IrrStatus irr_points_from_coords(const double *xy, size_t n, struct IrrPoints **out);

// Number of points; 0 for NULL.
//
// # Safety
// `points` must be NULL or a live handle.
size_t irr_points_len(const struct IrrPoints *points);

// Coordinates of point `i`.
//
// # Safety
// `points` must be a live handle; `x` and `y` valid for writes.
enum IrrStatus irr_points_get(const struct IrrPoints *points, size_t i, double *x, double *y);

// # Safety
// `points` must be NULL or a handle not yet freed.
void irr_points_free(struct IrrPoints *points);

// Sample the irrigation digraph on `points` with radius `r` and offspring
// law `law` (e.g. `"1:0.8,2:0.2"`). With `exclude_self`, draws skip the
// vertex itself.
//
// # Safety
// `points` must be a live handle, `law` a NUL-terminated string and `out`
// valid for writes.
enum IrrStatus irr_graph_sample(const struct IrrPoints *points,
                                double r,
                                const char *law,
                                uint64_t seed,
                                bool exclude_self,
                                struct IrrGraph **out);

// Vertex count; 0 for NULL.
//
// # Safety
// `graph` must be NULL or a live handle.
size_t irr_graph_len(const struct IrrGraph *graph);

// Number of arcs (self-draws excluded); 0 for NULL.
//
// # Safety
// `graph` must be NULL or a live handle.
size_t irr_graph_arc_count(const struct IrrGraph *graph);

// Copy the out-neighbours of `v` into `buf`. `*len` receives the
// out-degree; if it exceeds `cap`, nothing is copied and
// `IRR_STATUS_BUFFER_TOO_SMALL` is returned. `buf` may be NULL when `cap` is 0.
//
// # Safety
// `graph` must be a live handle, `buf` valid for `cap` writes and `len`
// valid for writes.
enum IrrStatus irr_graph_out(const struct IrrGraph *graph,
                             size_t v,
                             uint32_t *buf,
                             size_t cap,
                             size_t *len);

// # Safety
// `graph` must be a live handle and `out` valid for writes.
enum IrrStatus irr_graph_census(const struct IrrGraph *graph, struct IrrCensus *out);

// # Safety
// `graph` must be NULL or a handle not yet freed.
void irr_graph_free(struct IrrGraph *graph);

// Connectivity radius of the random geometric graph, sqrt(log n / (n pi)).
//
// # Safety
// `out` must be valid for writes.
enum IrrStatus irr_rgg_connectivity_radius(double n, double *out);

// Connectivity threshold of the irrigation graph, sqrt(2 log n / log log n).
//
// # Safety
// `out` must be valid for writes.
enum IrrStatus irr_irrigation_connectivity_threshold(double n, double *out);

// Root t0 > 1 of t log t - t - 1 = 0.
double irr_t_zero(void);

// Extinction probability of the Galton–Watson process whose offspring are
// Bin(xi, alpha), xi drawn from `law`.
//
// # Safety
// `law` must be a NUL-terminated string and `out` valid for writes.
enum IrrStatus irr_extinction_exact(const char *law, double alpha, double *out);

// Closed-form upper bound on the same extinction probability.
//
// # Safety
// `law` must be a NUL-terminated string and `out` valid for writes.
enum IrrStatus irr_extinction_bound(const char *law, double alpha, double *out);

#endif  /* IRRIGATION_LAB_H */
