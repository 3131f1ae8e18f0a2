#ifndef SURFFLOW_H
#define SURFFLOW_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Number of values written by [`sf_simulation_diagnostics`].
#define SF_NUM_DIAGNOSTICS 7

typedef enum SfFlowKind {
  SF_FLOW_KIND_MCF = 0,
  SF_FLOW_KIND_IMCF = 1,
  SF_FLOW_KIND_POWER_MCF = 2,
  SF_FLOW_KIND_POWER_IMCF = 3,
  SF_FLOW_KIND_LOG_MCF = 4,
} SfFlowKind;

typedef enum SfStatus {
  SF_STATUS_OK = 0,
  SF_STATUS_NULL_POINTER = 1,
  SF_STATUS_INVALID_ARGUMENT = 2,
  SF_STATUS_CONFIG = 3,
  SF_STATUS_GEOMETRY = 4,
  SF_STATUS_SOLVER = 5,
  SF_STATUS_IO = 6,
  SF_STATUS_PANIC = 7,
} SfStatus;

// Opaque surface mesh.
typedef struct SfMesh SfMesh;

// Opaque running simulation.
typedef struct SfSimulation SfSimulation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. Valid until the next call.
const char *sf_last_error(void);

// Radius at time `t` of a sphere of initial radius `r0` in R^3. `param` is `alpha` for
// the power flows and `h_tilde` for the logarithmic one, ignored otherwise.
//
// # Safety
// `out` must be valid for a write of one double.
enum SfStatus sf_sphere_radius(enum SfFlowKind kind,
                               double param,
                               double r0,
                               double t,
                               double *out);

// Icosahedral sphere mesh of degree `degree` after `refinement` subdivisions.
//
// # Safety
// `out` must be valid for a write of one pointer.
enum SfStatus sf_mesh_sphere(double radius, size_t refinement, size_t degree, struct SfMesh **out);

// Linear mesh read from an ASCII OFF file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` valid for a write of one pointer.
enum SfStatus sf_mesh_read_off(const char *path, struct SfMesh **out);

// # Safety
// `mesh` must be valid and `num_nodes`, `num_elements`, `degree` valid for writes
// (any of them may be NULL to skip).
enum SfStatus sf_mesh_info(const struct SfMesh *mesh,
                           size_t *num_nodes,
                           size_t *num_elements,
                           size_t *degree);

// Copies node coordinates as `x0 y0 z0 x1 ...` into `buf` of length `len >= 3 * nodes`.
//
// # Safety
// `mesh` must be valid and `buf` writable for `len` doubles.
enum SfStatus sf_mesh_nodes(const struct SfMesh *mesh, double *buf, size_t len);

// # Safety
// `mesh` must be NULL or a handle not yet freed.
void sf_mesh_free(struct SfMesh *mesh);

// Creates a simulation from configuration text and runs its startup. When `mesh` is not
// NULL it replaces the mesh named by the configuration.
//
// # Safety
// `config` must be a NUL-terminated string, `mesh` NULL or valid, `out` valid for a write
// of one pointer.
enum SfStatus sf_simulation_new(const char *config,
                                const struct SfMesh *mesh,
                                struct SfSimulation **out);

// Advances one time step. Stepping a finished simulation is an invalid argument.
//
// # Safety
// `sim` must be valid.
enum SfStatus sf_simulation_step(struct SfSimulation *sim);

// Current time, step index and whether the final time has been reached.
//
// # Safety
// `sim` must be valid; out-pointers may be NULL to skip.
enum SfStatus sf_simulation_status(const struct SfSimulation *sim,
                                   double *time,
                                   size_t *step,
                                   bool *finished);

// Current surface as a new mesh handle.
//
// # Safety
// `sim` must be valid and `out` valid for a write of one pointer.
enum SfStatus sf_simulation_mesh(const struct SfSimulation *sim, struct SfMesh **out);

// Writes area, Hawking mass, Schulze quantity, clamp count, min H, max H and the maximal
// normal defect of the current state ([`SF_NUM_DIAGNOSTICS`] values).
//
// # Safety
// `sim` must be valid and `buf` writable for `len` doubles.
enum SfStatus sf_simulation_diagnostics(const struct SfSimulation *sim, double *buf, size_t len);

// Legacy VTK snapshot of the current state.
//
// # Safety
// `sim` must be valid and `path` a NUL-terminated string.
enum SfStatus sf_simulation_write_vtk(const struct SfSimulation *sim, const char *path);

// # Safety
// `sim` must be NULL or a handle not yet freed.
void sf_simulation_free(struct SfSimulation *sim);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SURFFLOW_H */
