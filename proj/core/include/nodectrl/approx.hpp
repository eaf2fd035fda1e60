#pragma once

#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "nodectrl/control.hpp"
#include "nodectrl/flow.hpp"
#include "nodectrl/types.hpp"

namespace nodectrl {

/// Grid decomposition of the domain: thin strips of half-width zeta removed
/// around every covering hyperplane, the rest split into value-constant
/// hyperrectangles. Anything that is not a cell (strips, space outside every
/// region) is kept as removed fragments so the synthesis can track where that
/// mass ends up.
struct CellDecomposition {
  Box domain;
  std::vector<std::vector<double>> grid;  // per-axis sorted hyperplane offsets
  double zeta = 0.0;                      // strip half-width

  struct Cell {
    Box box;
    int target = -1;  // index into the target list
  };
  std::vector<Cell> cells;
  std::vector<Box> removed;

  std::size_t cover_count = 0;            // hypercubes covering the jump set
  std::vector<std::size_t> plane_counts;  // per-axis hyperplane counts

  std::size_t cell_count() const { return cells.size(); }
  /// Exact measure of the removed set (domain minus cells).
  double removed_measure() const;
};

/// A candidate cell saw more than one region value: the covering scale h is
/// too coarse for the boundary geometry. Callers refine h and retry.
class CellResolutionError : public std::runtime_error {
 public:
  CellResolutionError(std::string msg, Box cell)
      : std::runtime_error(std::move(msg)), cell(std::move(cell)) {}
  Box cell;
};

/// Covers the discontinuity set of f with lattice cubes of side h (lattice
/// anchored at the domain corner), takes all cube faces as hyperplanes,
/// removes strips of half-width zeta = h^d around them and classifies the
/// leftover grid boxes by region. Throws CellResolutionError when a grid box
/// straddles two regions.
CellDecomposition build_cover(const SimpleFunction& f, double h);

/// Upper box-counting dimension estimate: least-squares slope of
/// log N_Gamma(h) against log(1/h) over the supplied scales (>= 3 values).
/// Returns 0 when the boundary is empty.
double estimate_box_dimension(const SimpleFunction& f, const std::vector<double>& h_list);

/// Parameter bundle for the compression construction. The constructor takes
/// the decomposition and an upper bound for eta and solves for the largest
/// admissible delta under
///   eta  < 1/N,
///   delta < zeta/(8N),
///   delta <= cr * zeta / N_Gamma,
///   delta^2 <= eta^2 / ((d-1) + (1 + 8/zeta)^2).
struct ApproxParams {
  double eps = 0.0;  // informational: the accuracy target that drove h
  double h = 0.0;
  double zeta = 0.0;
  double eta = 0.0;
  double delta = 0.0;
  double nu = 0.0;  // final per-point proximity budget
  double cr = 0.125;

  static ApproxParams derive(const CellDecomposition& decomp, double eta_cap,
                             double cr = 0.125);
  void validate(int dim, std::size_t n_cells, std::size_t n_gamma) const;
};

/// Output of the full compression + ordering construction with exact interval
/// tracking of every cell and removed fragment.
struct LemmaResult {
  ControlSchedule schedule;
  std::vector<TrackedBox> boxes;  // final images; cells keep their ids
  double measured_c = 0.0;        // max_l dist(image_l^(1), alpha^(1)_{m(l)}) / eta
  double measured_k = 0.0;        // radius of the final image around the origin
};

/// Step 1 of the construction: per-coordinate compression with stacking
/// separations, the move away from the targets, and the last-coordinate
/// compression that spreads the cells along x1 with spacing 2/N.
ControlSchedule compression_schedule(const CellDecomposition& decomp,
                                     const ApproxParams& params,
                                     const std::vector<Point>& targets);

/// Step 2: per cell, two separating flows that sink everything else below a
/// reference line, a translation moving the cell's first coordinate onto its
/// target's, and a contraction restoring the transverse band.
ControlSchedule ordering_grouping_schedule(
    const std::vector<std::pair<Box, int>>& cell_images,
    const std::vector<Point>& targets, double eta);

/// Both steps composed, with measurements.
LemmaResult run_compression_lemma(const CellDecomposition& decomp,
                                  const ApproxParams& params,
                                  const std::vector<Point>& targets);

struct ApproxCertificate {
  double l2_error = 0.0;
  double removed_part = 0.0;  // contribution to the squared error from the removed set
  double eps = 0.0;
  double h = 0.0;
  double zeta = 0.0;
  double delta = 0.0;
  double eta = 0.0;
  std::size_t switches = 0;
  double sup_norm_w = 0.0;
  double sup_norm_b = 0.0;
  double measured_c = 0.0;
  double measured_k = 0.0;
};

/// Theorem-4 pipeline: target preparation, covering, compression, ordering &
/// grouping, simultaneous control of one representative per value cluster,
/// and the target-preparation suffix; h is refined until the quadrature
/// certifies an L2 error below eps.
ControlSchedule synthesize_approximator(const SimpleFunction& f, double eps,
                                        double horizon,
                                        ApproxCertificate* certificate = nullptr);

struct L2Report {
  double total = 0.0;
  double removed_part = 0.0;
  std::size_t grid_points = 0;
};

/// Midpoint-rule quadrature of |phi_T(x) - f(x)|^2 over the domain.
/// When a decomposition is supplied, the removed-set contribution is reported
/// separately.
L2Report l2_error_report(const SimpleFunction& f, const ControlSchedule& s,
                         double grid_step,
                         const CellDecomposition* decomp = nullptr);
double l2_error(const SimpleFunction& f, const ControlSchedule& s, double grid_step);

}  // namespace nodectrl
