#include "nodectrl/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nodectrl {

bool all_finite(const Point& p) {
  for (double v : p)
    if (!std::isfinite(v)) return false;
  return true;
}

double sup_norm(const Point& p) {
  double m = 0.0;
  for (double v : p) m = std::max(m, std::abs(v));
  return m;
}

double euclidean_distance(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

Box::Box(Point lo_, Point hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
  if (lo.size() != hi.size()) throw std::invalid_argument("Box: lo/hi dimension mismatch");
  for (std::size_t k = 0; k < lo.size(); ++k)
    if (!(lo[k] <= hi[k])) throw std::invalid_argument("Box: lo > hi");
}

double Box::volume() const {
  double v = 1.0;
  for (int k = 0; k < dim(); ++k) v *= side(k);
  return v;
}

Point Box::center() const {
  Point c(lo.size());
  for (std::size_t k = 0; k < lo.size(); ++k) c[k] = 0.5 * (lo[k] + hi[k]);
  return c;
}

double Box::diameter() const {
  double s = 0.0;
  for (int k = 0; k < dim(); ++k) s += side(k) * side(k);
  return std::sqrt(s);
}

bool Box::contains(const Point& p) const {
  for (std::size_t k = 0; k < lo.size(); ++k)
    if (p[k] < lo[k] || p[k] > hi[k]) return false;
  return true;
}

bool Box::intersects(const Box& other) const {
  for (std::size_t k = 0; k < lo.size(); ++k)
    if (hi[k] < other.lo[k] || other.hi[k] < lo[k]) return false;
  return true;
}

Box Box::hull(const Box& a, const Box& b) {
  Box h = a;
  for (std::size_t k = 0; k < h.lo.size(); ++k) {
    h.lo[k] = std::min(h.lo[k], b.lo[k]);
    h.hi[k] = std::max(h.hi[k], b.hi[k]);
  }
  return h;
}

void LabeledEnsemble::validate() const {
  if (points.empty()) throw std::invalid_argument("ensemble: no points");
  const std::size_t d = points[0].size();
  if (d < 1) throw std::invalid_argument("ensemble: zero-dimensional points");
  for (const auto& p : points) {
    if (p.size() != d) throw std::invalid_argument("ensemble: mixed dimensions");
    if (!all_finite(p)) throw std::invalid_argument("ensemble: non-finite coordinate");
  }
  if (labels.size() != points.size())
    throw std::invalid_argument("ensemble: |labels| != |points|");
  for (int l : labels)
    if (l < 1) throw std::invalid_argument("ensemble: labels must be >= 1");
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = i + 1; j < points.size(); ++j)
      if (points[i] == points[j])
        throw std::invalid_argument("ensemble: duplicate points");
}

StripPartition::StripPartition(std::vector<double> t) : thresholds(std::move(t)) {
  for (std::size_t i = 0; i + 1 < thresholds.size(); ++i)
    if (!(thresholds[i] < thresholds[i + 1]))
      throw std::invalid_argument("strip partition: thresholds must be strictly increasing");
  for (double v : thresholds)
    if (!std::isfinite(v)) throw std::invalid_argument("strip partition: non-finite threshold");
}

int StripPartition::strip_of_coord(double x1) const {
  // first m (1-based) with x1 <= alpha_m; past the last threshold -> strip M
  auto it = std::lower_bound(thresholds.begin(), thresholds.end(), x1);
  return static_cast<int>(it - thresholds.begin()) + 1;
}

int StripPartition::strip_of(const Point& x) const { return strip_of_coord(x[0]); }

std::pair<double, double> StripPartition::strip_bounds(int m) const {
  const double inf = std::numeric_limits<double>::infinity();
  double lo = (m <= 1) ? -inf : thresholds[m - 2];
  double hi = (m >= strip_count()) ? inf : thresholds[m - 1];
  return {lo, hi};
}

bool Region::contains(const Point& p) const {
  for (const auto& b : boxes)
    if (b.contains(p)) return true;
  return false;
}

int SimpleFunction::region_of(const Point& p) const {
  for (std::size_t m = 0; m < regions.size(); ++m)
    if (regions[m].contains(p)) return static_cast<int>(m);
  return -1;
}

Point SimpleFunction::value_at(const Point& p) const {
  int m = region_of(p);
  if (m >= 0) return regions[m].value;
  return Point(domain.dim(), 0.0);
}

void SimpleFunction::validate() const {
  if (domain.dim() < 1) throw std::invalid_argument("simple function: empty domain");
  for (const auto& r : regions) {
    if (r.value.size() != static_cast<std::size_t>(domain.dim()))
      throw std::invalid_argument("simple function: value dimension mismatch");
    for (const auto& b : r.boxes)
      if (b.dim() != domain.dim())
        throw std::invalid_argument("simple function: region box dimension mismatch");
  }
}

void DiscreteMeasure::validate() const {
  if (atoms.size() != weights.size())
    throw std::invalid_argument("measure: |atoms| != |weights|");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw std::invalid_argument("measure: weights must be positive");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw std::invalid_argument("measure: weights must sum to 1 (tol 1e-12)");
  const std::size_t d = atoms.empty() ? 0 : atoms[0].size();
  for (const auto& a : atoms)
    if (a.size() != d || !all_finite(a))
      throw std::invalid_argument("measure: bad atom");
}

int DensitySpec::dim() const {
  if (kind == Kind::uniform_boxes) return boxes.empty() ? 0 : boxes[0].dim();
  return points.empty() ? 0 : static_cast<int>(points[0].size());
}

Box DensitySpec::support_box() const {
  if (kind == Kind::uniform_boxes) {
    if (boxes.empty()) throw std::invalid_argument("density: empty support");
    Box h = boxes[0];
    for (std::size_t i = 1; i < boxes.size(); ++i) h = Box::hull(h, boxes[i]);
    return h;
  }
  if (points.empty()) throw std::invalid_argument("density: no samples");
  Box h(points[0], points[0]);
  for (const auto& p : points) {
    for (std::size_t k = 0; k < p.size(); ++k) {
      h.lo[k] = std::min(h.lo[k], p[k]);
      h.hi[k] = std::max(h.hi[k], p[k]);
    }
  }
  return h;
}

void DensitySpec::validate() const {
  if (kind == Kind::uniform_boxes) {
    if (boxes.empty()) throw std::invalid_argument("density: no boxes");
    double vol = 0.0;
    for (const auto& b : boxes) vol += b.volume();
    if (!(vol > 0.0)) throw std::invalid_argument("density: support has zero volume");
    for (std::size_t i = 0; i < boxes.size(); ++i)
      for (std::size_t j = i + 1; j < boxes.size(); ++j)
        if (boxes[i].dim() != boxes[j].dim())
          throw std::invalid_argument("density: mixed box dimensions");
  } else {
    if (points.empty()) throw std::invalid_argument("density: no samples");
    for (const auto& p : points)
      if (!all_finite(p)) throw std::invalid_argument("density: non-finite sample");
  }
}

}  // namespace nodectrl
