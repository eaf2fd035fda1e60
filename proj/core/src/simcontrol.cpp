#include "nodectrl/simcontrol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "nodectrl/classify.hpp"
#include "nodectrl/flow.hpp"

namespace nodectrl {

namespace {

void check_distinct(const std::vector<Point>& pts, const char* what) {
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      if (pts[i] == pts[j])
        throw std::invalid_argument(std::string(what) + " must be pairwise distinct");
}

void apply_segment(std::vector<Point>& live, const ElementaryControl& e) {
  for (auto& p : live) p = elementary_flow(p, e, e.tau);
}

// A first coordinate distinct from every current position and every target
// first coordinate; used to clear a point that blocks another's destination.
double fresh_first_coordinate(const std::vector<Point>& live,
                              const std::vector<Point>& targets) {
  double v = 1.0;
  for (const auto& p : live) v = std::max(v, p[0]);
  for (const auto& z : targets) v = std::max(v, z[0]);
  v += 1.0;
  auto taken = [&](double c) {
    for (const auto& p : live)
      if (p[0] == c) return true;
    for (const auto& z : targets)
      if (z[0] == c) return true;
    return false;
  };
  while (taken(v)) v += 1.0;
  return v;
}

}  // namespace

PreparedTargets prepare_targets(const std::vector<Point>& targets) {
  if (targets.empty()) throw std::invalid_argument("prepare_targets: no targets");
  if (targets[0].size() < 2) throw std::invalid_argument("prepare_targets: d >= 2 required");
  check_distinct(targets, "prepare_targets: targets");

  // Forward separation of the targets; its time reversal W(t) = -W'(T-t)
  // turns the backward trajectories into forward ones.
  ControlSchedule forward = prepare_points(targets);
  PreparedTargets out;
  out.pulled_back = integrate_schedule(targets, forward).finals;
  out.suffix = ControlSchedule(forward.dim);
  for (auto it = forward.segments.rbegin(); it != forward.segments.rend(); ++it) {
    ElementaryControl e = *it;
    for (double& w : e.motion) w = -w;
    out.suffix.push(std::move(e));
  }
  return out;
}

ControlSchedule synthesize_simcontrol(const std::vector<Point>& sources,
                                      const std::vector<Point>& targets,
                                      double horizon) {
  if (sources.size() != targets.size())
    throw std::invalid_argument("synthesize_simcontrol: |sources| != |targets|");
  if (sources.empty()) throw std::invalid_argument("synthesize_simcontrol: empty problem");
  if (!(horizon > 0.0)) throw std::invalid_argument("synthesize_simcontrol: horizon <= 0");
  const int d = static_cast<int>(sources[0].size());
  if (d < 2) throw std::invalid_argument("synthesize_simcontrol: d >= 2 required");
  check_distinct(sources, "synthesize_simcontrol: sources");
  check_distinct(targets, "synthesize_simcontrol: targets");

  PreparedTargets prepared = prepare_targets(targets);
  const std::vector<Point>& pulled = prepared.pulled_back;

  ControlSchedule schedule = prepare_points(sources);
  std::vector<Point> live = integrate_schedule(sources, schedule).finals;

  // First-component control (Theorem-1 machinery). A pending point parked
  // exactly on someone else's destination is relocated first so hyperplane
  // margins in later maneuvers never collapse.
  for (std::size_t j = 0; j < live.size(); ++j) {
    const double t1 = pulled[j][0];
    if (live[j][0] == t1) continue;
    for (std::size_t l = 0; l < live.size(); ++l) {
      if (l == j || live[l][0] != t1) continue;
      steer_first_coordinate(live, l, fresh_first_coordinate(live, pulled), schedule);
    }
    steer_first_coordinate(live, j, t1, schedule);
  }

  // Delivery sweep in ascending target first coordinate: one hyperplane
  // x1 = c per point, with c negative enough initially and then advanced just
  // past each delivered target, so delivered points stay frozen.
  std::vector<std::size_t> order(live.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return pulled[a][0] < pulled[b][0]; });

  double min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t q = 1; q < order.size(); ++q)
    min_gap = std::min(min_gap, pulled[order[q]][0] - pulled[order[q - 1]][0]);
  if (order.size() == 1) min_gap = 1.0;

  double c = live[order[0]][0];
  for (const auto& p : live) c = std::min(c, p[0]);
  c -= 1.0;

  for (std::size_t q = 0; q < order.size(); ++q) {
    const std::size_t idx = order[q];
    const double u = live[idx][0] - c;
    if (!(u > 0.0))
      throw std::runtime_error("synthesize_simcontrol: delivery hyperplane not behind point");

    double residual = 0.0;
    for (int j = 1; j < d; ++j)
      residual = std::max(residual, std::abs(pulled[idx][j] - live[idx][j]));
    if (residual > 0.0) {
      ElementaryControl e;
      e.axis = 0;
      e.sign = 1;
      e.offset = c;
      e.motion.assign(d, 0.0);
      for (int j = 1; j < d; ++j) e.motion[j] = (pulled[idx][j] - live[idx][j]) / u;
      e.tau = 1.0;
      schedule.push(e);
      apply_segment(live, e);
      for (int j = 1; j < d; ++j) live[idx][j] = pulled[idx][j];  // exact by construction
    }

    // Coordinate-1 correction (exact expansion/contraction onto the target).
    // The first-component stage already delivers it exactly, so this only
    // fires on externally assembled schedules.
    if (live[idx][0] != pulled[idx][0]) {
      const double from = live[idx][0] - c;
      const double to = pulled[idx][0] - c;
      if (!(from > 0.0) || !(to > 0.0))
        throw std::runtime_error("synthesize_simcontrol: correction target behind hyperplane");
      ElementaryControl e;
      e.axis = 0;
      e.sign = 1;
      e.offset = c;
      e.motion.assign(d, 0.0);
      e.motion[0] = 1.0;
      e.tau = std::log(to / from);
      if (e.tau < 0.0) {
        e.motion[0] = -1.0;
        e.tau = -e.tau;
      }
      if (e.tau > 0.0) {
        schedule.push(e);
        apply_segment(live, e);
        live[idx][0] = pulled[idx][0];
      }
    }

    c = pulled[idx][0] + 0.5 * min_gap;
  }

  schedule = concat(schedule, prepared.suffix);
  if (schedule.empty()) return schedule;
  return rescale(schedule, horizon);
}

ControlSchedule synthesize_approx_simcontrol(const std::vector<Point>& sources,
                                             std::vector<Point> targets,
                                             double eps, double horizon) {
  if (!(eps > 0.0))
    throw std::invalid_argument("synthesize_approx_simcontrol: eps must be positive");
  const int d = sources.empty() ? 0 : static_cast<int>(sources[0].size());

  // Deterministic perturbation of duplicates: cycle +-e1, +-e2 at eps/2,
  // halving the radius after each full cycle.
  for (std::size_t i = 0; i < targets.size(); ++i) {
    auto collides = [&](const Point& z) {
      for (std::size_t l = 0; l < i; ++l)
        if (targets[l] == z) return true;
      return false;
    };
    if (!collides(targets[i])) continue;
    const Point base = targets[i];
    double radius = 0.5 * eps;
    for (int attempt = 0;; ++attempt) {
      Point z = base;
      const int dir = attempt % 4;
      const int axis = (dir < 2) ? 0 : (d >= 2 ? 1 : 0);
      z[axis] += (dir % 2 == 0 ? radius : -radius);
      if (!collides(z)) {
        targets[i] = z;
        break;
      }
      if (dir == 3) radius *= 0.5;
      if (radius < 1e-300)
        throw std::runtime_error("synthesize_approx_simcontrol: perturbation failed");
    }
  }
  return synthesize_simcontrol(sources, targets, horizon);
}

}  // namespace nodectrl
