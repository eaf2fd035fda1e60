#pragma once

#include <functional>
#include <string>
#include <vector>

#include "nodectrl/types.hpp"

namespace nodectrl {

/// Scalar activation. The synthesis routines emit ReLU only; a custom
/// Lipschitz activation (zero on (-inf,0], positive on (0,inf)) may be
/// attached for numerical integration, in which case only the RK4 path
/// applies.
struct Activation {
  enum class Kind { relu, custom };
  Kind kind = Kind::relu;
  std::function<double(double)> fn;  // used when kind == custom
  double lipschitz = 1.0;

  double operator()(double u) const {
    if (kind == Kind::relu) return u > 0.0 ? u : 0.0;
    return fn(u);
  }
  bool is_relu() const { return kind == Kind::relu; }
};

/// One constant-control segment of the NODE
///   xdot = w * sigma(s * (x^(k) - c)),
/// i.e. A = s e_k e_k^T, b = -s c e_k, W = w placed on row-selector k.
/// The hyperplane {x^(k) = c} splits the space: the half-space with
/// s(x^(k)-c) <= 0 is frozen, the other moves along w. ||A||_inf = 1 by
/// construction.
struct ElementaryControl {
  int axis = 0;                // k, 0-based
  int sign = 1;                // s in {+1,-1}
  double offset = 0.0;         // c
  std::vector<double> motion;  // w in R^d
  double tau = 0.0;            // duration, > 0
  Activation activation{};

  int dim() const { return static_cast<int>(motion.size()); }
  void validate() const;
};

/// Ordered list of elementary segments; the flow is their composition in
/// order. Immutable by convention: operations return new schedules.
struct ControlSchedule {
  int dim = 0;
  std::vector<ElementaryControl> segments;

  ControlSchedule() = default;
  explicit ControlSchedule(int d) : dim(d) {}

  double total_time() const;
  std::size_t switch_count() const { return segments.size(); }
  bool empty() const { return segments.empty(); }
  void push(ElementaryControl e);  // validates dimension and tau
};

struct ScheduleMetrics {
  std::size_t switches = 0;
  double sup_norm_w = 0.0;  // max_i ||w_i||_inf
  double sup_norm_b = 0.0;  // max_i |c_i|
  double total_time = 0.0;
};

/// a followed by b. Dimensions must match (empty schedules adapt).
ControlSchedule concat(const ControlSchedule& a, const ControlSchedule& b);

/// Rescale the horizon to t_new: every tau_i scales by t_new/T and every w_i
/// by T/t_new, so the flow map is unchanged.
ControlSchedule rescale(const ControlSchedule& s, double t_new);

ScheduleMetrics schedule_metrics(const ControlSchedule& s);

/// JSON document {d, T, segments:[{k, s, c, w:[...], tau}]} with k 1-based.
/// Doubles are written with 17 significant digits so the round trip is
/// value-exact. Only ReLU schedules serialize.
std::string schedule_to_json(const ControlSchedule& s);
ControlSchedule schedule_from_json(const std::string& text);

}  // namespace nodectrl
