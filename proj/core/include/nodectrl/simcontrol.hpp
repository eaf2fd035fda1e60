#pragma once

#include <utility>
#include <vector>

#include "nodectrl/control.hpp"
#include "nodectrl/types.hpp"

namespace nodectrl {

struct PreparedTargets {
  ControlSchedule suffix;          // flowing pulled_back through suffix restores the targets
  std::vector<Point> pulled_back;  // pairwise distinct first coordinates
};

/// Target preparation via the backward NODE: separates coincident target
/// first coordinates with the same machinery as prepare_points, then returns
/// the time-reversed schedule (segments reversed, motion negated) together
/// with the pulled-back targets.
PreparedTargets prepare_targets(const std::vector<Point>& targets);

/// Theorem-2 synthesis: exact simultaneous control of x_i -> z_i.
/// Composition: input separation, per-point first-coordinate control, a
/// rightward-sweeping delivery of the remaining coordinates (one hyperplane
/// x1 = c per point, c advanced past each delivered target), and the target
/// preparation suffix; rescaled to the horizon.
ControlSchedule synthesize_simcontrol(const std::vector<Point>& sources,
                                      const std::vector<Point>& targets,
                                      double horizon);

/// Relaxation for coincident targets: perturbs duplicates by at most eps along
/// cycled coordinate directions, then controls exactly to the perturbed set.
ControlSchedule synthesize_approx_simcontrol(const std::vector<Point>& sources,
                                             std::vector<Point> targets,
                                             double eps, double horizon);

}  // namespace nodectrl
