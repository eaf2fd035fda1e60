#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace nodectrl {

/// State vector in R^d. Coordinates follow the usual 0-based C++ indexing;
/// file formats and error messages use 1-based coordinate names (x1..xd).
using Point = std::vector<double>;

bool all_finite(const Point& p);
double sup_norm(const Point& p);
double euclidean_distance(const Point& a, const Point& b);

/// Closed axis-aligned hyperrectangle [lo, hi].
struct Box {
  Point lo;
  Point hi;

  Box() = default;
  Box(Point lo_, Point hi_);

  int dim() const { return static_cast<int>(lo.size()); }
  double side(int k) const { return hi[k] - lo[k]; }
  double volume() const;
  Point center() const;
  double diameter() const;
  bool contains(const Point& p) const;
  bool intersects(const Box& other) const;
  /// Smallest box containing both.
  static Box hull(const Box& a, const Box& b);
};

/// Finite labeled dataset: N distinct points with labels in [1, M].
struct LabeledEnsemble {
  std::vector<Point> points;
  std::vector<int> labels;

  int dim() const { return points.empty() ? 0 : static_cast<int>(points[0].size()); }
  std::size_t size() const { return points.size(); }
  void validate() const;  // throws std::invalid_argument on inconsistency
};

/// Partition of R^d into M strips on the first coordinate,
///   S_m = { alpha_{m-1} < x1 <= alpha_m },  alpha_0 = -inf, alpha_M = +inf.
struct StripPartition {
  std::vector<double> thresholds;  // strictly increasing, size M-1

  explicit StripPartition(std::vector<double> t);
  int strip_count() const { return static_cast<int>(thresholds.size()) + 1; }
  /// 1-based index m of the unique strip with alpha_{m-1} < x1 <= alpha_m.
  int strip_of(const Point& x) const;
  int strip_of_coord(double x1) const;
  /// [lo, hi) style bounds of strip m; unbounded ends reported as +-inf.
  std::pair<double, double> strip_bounds(int m) const;
};

/// One value region of a simple function, stored as a union of boxes.
struct Region {
  std::vector<Box> boxes;
  Point value;  // alpha_m in R^d

  bool contains(const Point& p) const;
};

/// Simple function f = sum_m alpha_m 1_{Omega_m} on a bounded box domain.
/// Regions must be pairwise disjoint (shared faces are fine, interiors not).
/// Points of the domain outside every region evaluate to 0 and are excluded
/// from the cell decomposition (they count toward the removed set).
///
/// For boundary-complexity experiments a custom sampler of the discontinuity
/// set can be attached; it receives the covering scale h and must return
/// points that are h/2-dense on the boundary.
struct SimpleFunction {
  Box domain;
  std::vector<Region> regions;
  std::function<std::vector<Point>(double h)> boundary_sampler;  // optional

  int dim() const { return domain.dim(); }
  /// Index of the region containing p, or -1.
  int region_of(const Point& p) const;
  /// f(p); zero vector outside every region.
  Point value_at(const Point& p) const;
  void validate() const;
};

/// Finitely supported probability measure: positive weights summing to 1.
struct DiscreteMeasure {
  std::vector<Point> atoms;
  std::vector<double> weights;

  std::size_t size() const { return atoms.size(); }
  int dim() const { return atoms.empty() ? 0 : static_cast<int>(atoms[0].size()); }
  void validate() const;  // weights > 0, sum to 1 within 1e-12
};

/// Compactly supported source density: either uniform on a union of boxes or
/// an empirical sample cloud with equal weights.
struct DensitySpec {
  enum class Kind { uniform_boxes, samples };
  Kind kind = Kind::uniform_boxes;
  std::vector<Box> boxes;     // uniform_boxes
  std::vector<Point> points;  // samples

  int dim() const;
  Box support_box() const;
  void validate() const;
};

}  // namespace nodectrl
