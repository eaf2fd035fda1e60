#include "nodectrl/classify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nodectrl {

namespace {

constexpr double kMarginFloor = 1e-9;
// Clearance in coordinate 2 established below the steered point by steps
// (a)/(b); r'' in step (c) is half of it.
constexpr double kIsolationDrop = 0.5;
// Fallback duration for an (a)/(b) segment with nothing to move; keeps the
// three-segment shape of the maneuver.
constexpr double kIdleTau = 1e-3;

void apply_segment(std::vector<Point>& live, const ElementaryControl& e) {
  for (auto& p : live) p = elementary_flow(p, e, e.tau);
}

// Smallest nonzero gap among current first coordinates, or fallback when all
// coincide.
double min_first_gap(const std::vector<Point>& live) {
  double g = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < live.size(); ++i)
    for (std::size_t j = i + 1; j < live.size(); ++j) {
      const double gap = std::abs(live[i][0] - live[j][0]);
      if (gap > 0.0) g = std::min(g, gap);
    }
  return std::isfinite(g) ? g : 1.0;
}

}  // namespace

ControlSchedule prepare_points(const std::vector<Point>& points) {
  if (points.empty()) throw std::invalid_argument("prepare_points: empty ensemble");
  const int d = static_cast<int>(points[0].size());
  if (d < 2)
    throw std::invalid_argument(
        "prepare_points: d >= 2 required (order of first coordinates cannot change in d = 1)");
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = i + 1; j < points.size(); ++j)
      if (points[i] == points[j])
        throw std::invalid_argument("prepare_points: points must be pairwise distinct");

  ControlSchedule schedule(d);
  std::vector<Point> live = points;
  const std::size_t max_rounds = points.size();  // N-1 suffice; guard at N

  for (std::size_t round = 0; round <= max_rounds; ++round) {
    // lexicographically first colliding pair
    std::size_t pi = live.size(), pj = live.size();
    for (std::size_t i = 0; i < live.size() && pi == live.size(); ++i)
      for (std::size_t j = i + 1; j < live.size(); ++j)
        if (live[i][0] == live[j][0]) {
          pi = i;
          pj = j;
          break;
        }
    if (pi == live.size()) return schedule;
    if (round == max_rounds)
      throw std::runtime_error("prepare_points: separation did not terminate");

    int k = -1;
    for (int q = 1; q < d; ++q)
      if (live[pi][q] != live[pj][q]) {
        k = q;
        break;
      }
    if (k < 0) throw std::runtime_error("prepare_points: indistinct pair survived validation");

    ElementaryControl e;
    e.axis = k;
    e.sign = 1;
    e.offset = 0.5 * (live[pi][k] + live[pj][k]);
    e.motion.assign(d, 0.0);
    e.motion[0] = 1.0;

    double h_max = 0.0;
    for (const auto& p : live) h_max = std::max(h_max, p[k] - e.offset);
    e.tau = min_first_gap(live) / (4.0 * h_max);

    schedule.push(e);
    apply_segment(live, e);
  }
  return schedule;
}

ControlSchedule prepare_dataset(const LabeledEnsemble& ensemble) {
  ensemble.validate();
  return prepare_points(ensemble.points);
}

void steer_first_coordinate(std::vector<Point>& live, std::size_t idx,
                            double target_x1, ControlSchedule& schedule) {
  const int d = static_cast<int>(live[idx].size());
  const double p1 = live[idx][0];
  const double p2 = live[idx][1];

  // (a) clear everything strictly right of p1 to below p2 - drop
  {
    double nearest_above = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < live.size(); ++i)
      if (i != idx && live[i][0] > p1)
        nearest_above = std::min(nearest_above, live[i][0]);
    const double r = std::isfinite(nearest_above)
                         ? std::max(0.5 * (nearest_above - p1), kMarginFloor)
                         : 1.0;
    ElementaryControl e;
    e.axis = 0;
    e.sign = 1;
    e.offset = p1 + r;
    e.motion.assign(d, 0.0);
    e.motion[1] = -1.0;
    double needed = 0.0;
    for (std::size_t i = 0; i < live.size(); ++i)
      if (i != idx && live[i][0] > e.offset)
        needed = std::max(needed, (live[i][1] - p2 + kIsolationDrop) / (live[i][0] - e.offset));
    e.tau = std::max(1.1 * needed, kIdleTau);
    schedule.push(e);
    apply_segment(live, e);
  }

  // (b) same on the left side
  {
    double nearest_below = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < live.size(); ++i)
      if (i != idx && live[i][0] < p1)
        nearest_below = std::max(nearest_below, live[i][0]);
    const double r = std::isfinite(nearest_below)
                         ? std::max(0.5 * (p1 - nearest_below), kMarginFloor)
                         : 1.0;
    ElementaryControl e;
    e.axis = 0;
    e.sign = -1;
    e.offset = p1 - r;
    e.motion.assign(d, 0.0);
    e.motion[1] = -1.0;
    double needed = 0.0;
    for (std::size_t i = 0; i < live.size(); ++i)
      if (i != idx && live[i][0] < e.offset)
        needed = std::max(needed, (live[i][1] - p2 + kIsolationDrop) / (e.offset - live[i][0]));
    e.tau = std::max(1.1 * needed, kIdleTau);
    schedule.push(e);
    apply_segment(live, e);
  }

  // (c) the point is now alone above x2 = p2 - drop; translate it along e_1
  {
    double highest_other = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < live.size(); ++i)
      if (i != idx) highest_other = std::max(highest_other, live[i][1]);
    double rpp = std::isfinite(highest_other) ? 0.5 * (p2 - highest_other) : 1.0;
    if (rpp <= 0.0)
      throw std::runtime_error("steer_first_coordinate: isolation failed");
    ElementaryControl e;
    e.axis = 1;
    e.sign = 1;
    e.offset = p2 - rpp;
    e.motion.assign(d, 0.0);
    const double delta = target_x1 - p1;
    e.motion[0] = delta >= 0.0 ? 1.0 : -1.0;
    e.tau = std::abs(delta) / rpp;
    if (e.tau <= 0.0) e.tau = kIdleTau;  // degenerate request, harmless idle
    schedule.push(e);
    apply_segment(live, e);
    live[idx][0] = target_x1;  // exact by construction; pin the representation
  }
}

ControlSchedule synthesize_classifier(const LabeledEnsemble& ensemble,
                                      const StripPartition& strips,
                                      double horizon) {
  ensemble.validate();
  if (!(horizon > 0.0)) throw std::invalid_argument("synthesize_classifier: horizon <= 0");
  if (ensemble.dim() < 2)
    throw std::invalid_argument("synthesize_classifier: d >= 2 required");
  const int strip_count = strips.strip_count();
  for (int l : ensemble.labels)
    if (l > strip_count)
      throw std::invalid_argument("synthesize_classifier: label exceeds strip count");

  ControlSchedule schedule = prepare_points(ensemble.points);
  std::vector<Point> live =
      integrate_schedule(ensemble.points, schedule).finals;

  for (std::size_t j = 0; j < live.size(); ++j) {
    const int label = ensemble.labels[j];
    if (strips.strip_of(live[j]) == label) continue;  // W = 0, no action

    auto [lo, hi] = strips.strip_bounds(label);
    // Unbounded strips clamped to a window one unit beyond the thresholds.
    const double wlo = std::max(lo, strips.thresholds.front() - 1.0);
    const double whi = std::min(hi, strips.thresholds.back() + 1.0);
    double z = 0.5 * (wlo + whi);
    const double nudge = std::max(1e-9, 1e-12 * (std::abs(z) + 1.0));
    auto occupied = [&](double v) {
      for (std::size_t i = 0; i < live.size(); ++i)
        if (live[i][0] == v) return true;
      return false;
    };
    while (occupied(z)) z += nudge;

    steer_first_coordinate(live, j, z, schedule);
  }

  if (schedule.empty()) return schedule;
  return rescale(schedule, horizon);
}

ClassificationReport verify_classification(const LabeledEnsemble& ensemble,
                                           const StripPartition& strips,
                                           const ControlSchedule& schedule) {
  ensemble.validate();
  ClassificationReport rep;
  auto finals = integrate_schedule(ensemble.points, schedule).finals;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < finals.size(); ++i) {
    ClassificationReport::Row row;
    row.initial = ensemble.points[i];
    row.final = finals[i];
    row.label = ensemble.labels[i];
    row.assigned = strips.strip_of(finals[i]);
    row.correct = row.assigned == row.label;
    if (row.correct) ++correct;
    rep.rows.push_back(std::move(row));
  }
  rep.accuracy = finals.empty() ? 1.0 : static_cast<double>(correct) / finals.size();
  rep.metrics = schedule_metrics(schedule);
  return rep;
}

}  // namespace nodectrl
