#include "nodectrl/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nodectrl {

Point elementary_flow(const Point& x, const ElementaryControl& e, double t) {
  if (!e.activation.is_relu())
    throw std::invalid_argument("elementary_flow: closed form requires ReLU; use rk4_flow");
  if (t < 0.0 || t > e.tau * (1.0 + 1e-12))
    throw std::invalid_argument("elementary_flow: t outside [0, tau]");
  const int k = e.axis;
  const double s = static_cast<double>(e.sign);
  const double u0 = s * (x[k] - e.offset);
  if (u0 <= 0.0) return x;  // frozen half-space, sigma vanishes for all time

  Point y = x;
  const double wk = e.motion[k];
  if (wk != 0.0) {
    const double growth = std::exp(s * wk * t);
    y[k] = e.offset + s * u0 * growth;
    const double shear = s * u0 * (growth - 1.0) / wk;
    for (int j = 0; j < e.dim(); ++j)
      if (j != k) y[j] = x[j] + e.motion[j] * shear;
  } else {
    for (int j = 0; j < e.dim(); ++j)
      if (j != k) y[j] = x[j] + e.motion[j] * u0 * t;
  }
  return y;
}

Point flow_point(const Point& x, const ControlSchedule& s) {
  Point y = x;
  for (const auto& e : s.segments) y = elementary_flow(y, e, e.tau);
  return y;
}

IntegrationResult integrate_schedule(const std::vector<Point>& ensemble,
                                     const ControlSchedule& s,
                                     const IntegrationOptions& opts) {
  for (const auto& p : ensemble)
    if (s.dim != 0 && static_cast<int>(p.size()) != s.dim)
      throw std::invalid_argument("integrate_schedule: point dimension mismatch");

  IntegrationResult out;
  out.finals.reserve(ensemble.size());
  if (opts.record) out.trajectories.resize(ensemble.size());

  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    Point y = ensemble[i];
    double t0 = 0.0;
    if (opts.record) {
      out.trajectories[i].times.push_back(0.0);
      out.trajectories[i].states.push_back(y);
    }
    for (const auto& e : s.segments) {
      if (opts.record) {
        for (int q = 1; q <= opts.interior_samples; ++q) {
          const double frac = static_cast<double>(q) / (opts.interior_samples + 1);
          out.trajectories[i].times.push_back(t0 + frac * e.tau);
          out.trajectories[i].states.push_back(elementary_flow(y, e, frac * e.tau));
        }
      }
      y = elementary_flow(y, e, e.tau);
      t0 += e.tau;
      if (opts.record) {
        out.trajectories[i].times.push_back(t0);
        out.trajectories[i].states.push_back(y);
      }
    }
    out.finals.push_back(std::move(y));
  }
  return out;
}

namespace {

Point field_at(const Point& x, const ElementaryControl& e) {
  const double u = static_cast<double>(e.sign) * (x[e.axis] - e.offset);
  const double a = e.activation(u);
  Point f(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) f[j] = e.motion[j] * a;
  return f;
}

}  // namespace

Point rk4_flow(const Point& x, const ControlSchedule& s, double h_step) {
  if (!(h_step > 0.0)) throw std::invalid_argument("rk4_flow: step must be positive");
  Point y = x;
  const std::size_t d = y.size();
  Point k1(d), k2(d), k3(d), k4(d), tmp(d);
  for (const auto& e : s.segments) {
    const long n_steps = std::max(1L, static_cast<long>(std::ceil(e.tau / h_step)));
    const double h = e.tau / static_cast<double>(n_steps);
    for (long step = 0; step < n_steps; ++step) {
      k1 = field_at(y, e);
      for (std::size_t j = 0; j < d; ++j) tmp[j] = y[j] + 0.5 * h * k1[j];
      k2 = field_at(tmp, e);
      for (std::size_t j = 0; j < d; ++j) tmp[j] = y[j] + 0.5 * h * k2[j];
      k3 = field_at(tmp, e);
      for (std::size_t j = 0; j < d; ++j) tmp[j] = y[j] + h * k3[j];
      k4 = field_at(tmp, e);
      for (std::size_t j = 0; j < d; ++j)
        y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    }
  }
  return y;
}

InjectivityReport is_injective_sample(const std::vector<Point>& ensemble,
                                      const ControlSchedule& s) {
  const double inf = std::numeric_limits<double>::infinity();
  InjectivityReport rep;
  rep.min_distance_before = inf;
  for (std::size_t i = 0; i < ensemble.size(); ++i)
    for (std::size_t j = i + 1; j < ensemble.size(); ++j) {
      const double dist = euclidean_distance(ensemble[i], ensemble[j]);
      if (dist == 0.0)
        throw std::invalid_argument("is_injective_sample: points must be pairwise distinct");
      rep.min_distance_before = std::min(rep.min_distance_before, dist);
    }

  const auto finals = integrate_schedule(ensemble, s).finals;
  rep.min_distance_after = inf;
  for (std::size_t i = 0; i < finals.size(); ++i)
    for (std::size_t j = i + 1; j < finals.size(); ++j)
      rep.min_distance_after =
          std::min(rep.min_distance_after, euclidean_distance(finals[i], finals[j]));
  rep.injective = rep.min_distance_after > 0.0;
  return rep;
}

BoxSide box_side(const Box& b, const ElementaryControl& e) {
  const int k = e.axis;
  if (e.sign > 0) {
    if (b.hi[k] <= e.offset) return BoxSide::frozen;
    if (b.lo[k] >= e.offset) return BoxSide::active;
  } else {
    if (b.lo[k] >= e.offset) return BoxSide::frozen;
    if (b.hi[k] <= e.offset) return BoxSide::active;
  }
  return BoxSide::straddle;
}

Box apply_elementary_to_box(const Box& b, const ElementaryControl& e) {
  // On the closed active half-space the time-tau map is affine with
  //   x^(k) -> c + (x^(k)-c) E,           E = exp(s w_k tau) > 0
  //   x^(j) -> x^(j) + beta_j (x^(k)-c),  beta_j = (w_j/w_k)(E-1)   (w_k != 0)
  //                                       beta_j = w_j s tau        (w_k == 0)
  // which is separable and monotone in each input coordinate, so interval
  // endpoints map to interval endpoints.
  const int k = e.axis;
  const double s = static_cast<double>(e.sign);
  const double wk = e.motion[k];
  const double c = e.offset;
  Box out = b;
  double growth = 1.0;
  if (wk != 0.0) {
    growth = std::exp(s * wk * e.tau);
    out.lo[k] = c + (b.lo[k] - c) * growth;
    out.hi[k] = c + (b.hi[k] - c) * growth;
  }
  for (int j = 0; j < b.dim(); ++j) {
    if (j == k) continue;
    const double beta = (wk != 0.0) ? e.motion[j] * (growth - 1.0) / wk
                                    : e.motion[j] * s * e.tau;
    const double d1 = beta * (b.lo[k] - c);
    const double d2 = beta * (b.hi[k] - c);
    out.lo[j] = b.lo[j] + std::min(d1, d2);
    out.hi[j] = b.hi[j] + std::max(d1, d2);
  }
  return out;
}

std::vector<TrackedBox> propagate_boxes(std::vector<TrackedBox> boxes,
                                        const ControlSchedule& s) {
  for (const auto& e : s.segments) {
    std::vector<TrackedBox> next;
    next.reserve(boxes.size());
    for (auto& tb : boxes) {
      switch (box_side(tb.box, e)) {
        case BoxSide::frozen:
          next.push_back(std::move(tb));
          break;
        case BoxSide::active:
          next.push_back({apply_elementary_to_box(tb.box, e), tb.cell_id});
          break;
        case BoxSide::straddle: {
          if (tb.cell_id >= 0)
            throw std::runtime_error(
                "propagate_boxes: cell box straddles a segment hyperplane");
          TrackedBox left = tb, right = tb;
          left.box.hi[e.axis] = e.offset;
          right.box.lo[e.axis] = e.offset;
          auto& act = (e.sign > 0) ? right : left;
          auto& frz = (e.sign > 0) ? left : right;
          act.box = apply_elementary_to_box(act.box, e);
          next.push_back(std::move(frz));
          next.push_back(std::move(act));
          break;
        }
      }
    }
    boxes = std::move(next);
  }
  return boxes;
}

}  // namespace nodectrl
