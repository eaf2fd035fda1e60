#pragma once

#include <vector>

#include "nodectrl/control.hpp"
#include "nodectrl/flow.hpp"
#include "nodectrl/types.hpp"

namespace nodectrl {

struct ClassificationReport {
  struct Row {
    Point initial;
    Point final;
    int label = 0;
    int assigned = 0;
    bool correct = false;
  };
  std::vector<Row> rows;
  double accuracy = 0.0;
  ScheduleMetrics metrics;
};

/// Separation stage: returns a schedule whose flow gives the points pairwise
/// distinct first coordinates. Empty when they already are. Each segment
/// translates one half-space along e_1 across a hyperplane that splits the
/// first still-colliding pair; the duration tau = g_min/(4 h_max) keeps every
/// already-separated pair separated, so at most N-1 segments are emitted.
ControlSchedule prepare_points(const std::vector<Point>& points);

/// prepare_points on the ensemble's point set (labels ignored).
ControlSchedule prepare_dataset(const LabeledEnsemble& ensemble);

/// Emits the three-segment classification maneuver for live[idx] and applies
/// it to the whole live ensemble:
///   (a) hyperplane x1 = p1 + r  pushes everything right of it below p2,
///   (b) hyperplane x1 = p1 - r' pushes everything left of it below p2,
///   (c) hyperplane x2 = p2 - r'' isolates the point and translates its first
///       coordinate exactly to target_x1 (constant speed r'').
/// Every other point keeps its first coordinate throughout.
void steer_first_coordinate(std::vector<Point>& live, std::size_t idx,
                            double target_x1, ControlSchedule& schedule);

/// Theorem-1 synthesis: preparation, then per misplaced point the three-step
/// maneuver onto a fresh first coordinate inside its label's strip, then
/// rescaling to total time horizon.
ControlSchedule synthesize_classifier(const LabeledEnsemble& ensemble,
                                      const StripPartition& strips,
                                      double horizon);

ClassificationReport verify_classification(const LabeledEnsemble& ensemble,
                                           const StripPartition& strips,
                                           const ControlSchedule& schedule);

}  // namespace nodectrl
