#pragma once

#include <optional>
#include <vector>

#include "nodectrl/control.hpp"
#include "nodectrl/types.hpp"

namespace nodectrl {

/// Sampled path of one point under a schedule.
struct Trajectory {
  std::vector<double> times;
  std::vector<Point> states;
};

/// Exact state at time t in [0, tau] of xdot = w sigma(s(x^(k)-c)) for ReLU.
///
/// With u0 = s(x^(k)(0)-c):
///   u0 <= 0      : x is fixed (frozen half-space).
///   u0 >  0      : u(t) = u0 exp(s w_k t) stays positive, so the trajectory
///                  never reaches the hyperplane and the linear solution is
///                  valid on the whole segment:
///                    x^(k)(t) = c + s u(t)
///                    x^(j)(t) = x^(j)(0) + (w_j/w_k) s u0 (exp(s w_k t)-1)
///                  (w_k = 0 degenerates to x^(j)(0) + w_j u0 t).
///
/// Throws std::invalid_argument for custom activations or t outside [0,tau].
Point elementary_flow(const Point& x, const ElementaryControl& e, double t);

struct IntegrationOptions {
  bool record = false;
  int interior_samples = 16;  // per segment, in addition to boundaries
};

struct IntegrationResult {
  std::vector<Point> finals;
  std::vector<Trajectory> trajectories;  // empty unless recording
};

/// Segment-wise composition of elementary flows over an ensemble.
IntegrationResult integrate_schedule(const std::vector<Point>& ensemble,
                                     const ControlSchedule& s,
                                     const IntegrationOptions& opts = {});

/// Convenience: closed-form end state of a single point.
Point flow_point(const Point& x, const ControlSchedule& s);

/// Classical fixed-step RK4 across every segment (step <= h_step, final step
/// truncated to land on the segment boundary exactly). Independent oracle for
/// the closed forms and the only execution path for custom activations.
Point rk4_flow(const Point& x, const ControlSchedule& s, double h_step);

struct InjectivityReport {
  bool injective = true;
  double min_distance_before = 0.0;
  double min_distance_after = 0.0;
};

/// Integrates the ensemble and checks that images stay pairwise distinct.
/// Throws std::invalid_argument if the inputs are not pairwise distinct.
InjectivityReport is_injective_sample(const std::vector<Point>& ensemble,
                                      const ControlSchedule& s);

// ---------------------------------------------------------------------------
// Exact propagation of axis-aligned boxes.
//
// Every segment the synthesizers emit is either a contraction/expansion
// (motion parallel to e_k) or a translation (w_k = 0). In both cases the
// flow map restricted to one closed half-space is affine and separable in
// each input coordinate, so the bounding box of the image of a box is exact
// and computable from the interval endpoints. Boxes straddling the segment
// hyperplane are split there; the two halves never rejoin because the flow
// cannot cross its own hyperplane.
// ---------------------------------------------------------------------------

enum class BoxSide { frozen, active, straddle };

BoxSide box_side(const Box& b, const ElementaryControl& e);

/// Image bounding box of a box lying wholly in the active half-space.
Box apply_elementary_to_box(const Box& b, const ElementaryControl& e);

/// Box with an owner tag: cell index >= 0, or -1 for removed-set fragments.
struct TrackedBox {
  Box box;
  int cell_id = -1;
};

/// Pushes tracked boxes through the schedule. Fragments (cell_id < 0) may be
/// split at hyperplanes; a straddling cell box throws std::runtime_error
/// (the synthesizers guarantee cells stay on one side of every hyperplane).
std::vector<TrackedBox> propagate_boxes(std::vector<TrackedBox> boxes,
                                        const ControlSchedule& s);

}  // namespace nodectrl
