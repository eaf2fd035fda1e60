#include "nodectrl/approx.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "nodectrl/parallel.hpp"
#include "nodectrl/simcontrol.hpp"

namespace nodectrl {

namespace {

constexpr double kSafety = 1.1;   // multiplies every closed-form duration
constexpr double kMinTau = 1e-15; // segments shorter than this are dropped

// ---------------------------------------------------------------------------
// Covering helpers
// ---------------------------------------------------------------------------

// Per-axis sorted coordinates of all region-box faces clipped to [lo, hi],
// including lo and hi themselves: the class function is constant on the open
// cells of this arrangement, so testing one interior point per cell is exact.
std::vector<double> arrangement_coords(const SimpleFunction& f, int axis,
                                       double lo, double hi) {
  std::vector<double> xs{lo, hi};
  for (const auto& r : f.regions)
    for (const auto& b : r.boxes) {
      if (b.lo[axis] > lo && b.lo[axis] < hi) xs.push_back(b.lo[axis]);
      if (b.hi[axis] > lo && b.hi[axis] < hi) xs.push_back(b.hi[axis]);
    }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  return xs;
}

// Distinct region classes (-1 = outside every region) met by the open
// sub-cells of box [lo, hi]; early-outs after finding two.
int count_classes(const SimpleFunction& f, const Point& lo, const Point& hi,
                  int* single_class) {
  const int d = f.dim();
  std::vector<std::vector<double>> xs(d);
  std::vector<std::size_t> idx(d, 0);
  for (int k = 0; k < d; ++k) {
    xs[k] = arrangement_coords(f, k, lo[k], hi[k]);
    if (xs[k].size() < 2) return 0;  // degenerate box
  }
  std::set<int> classes;
  Point probe(d);
  for (;;) {
    for (int k = 0; k < d; ++k)
      probe[k] = 0.5 * (xs[k][idx[k]] + xs[k][idx[k] + 1]);
    classes.insert(f.region_of(probe));
    if (classes.size() >= 2) return 2;
    int k = 0;
    for (; k < d; ++k) {
      if (++idx[k] + 1 < xs[k].size()) break;
      idx[k] = 0;
    }
    if (k == d) break;
  }
  if (single_class) *single_class = classes.empty() ? -1 : *classes.begin();
  return static_cast<int>(classes.size());
}

struct CoverInfo {
  std::size_t cube_count = 0;
  std::vector<std::vector<double>> planes;  // cube faces, per axis, sorted
};

// Lattice cubes (side h, anchored at domain.lo) whose closed cube meets the
// discontinuity set of f. Exact for box regions via the arrangement test on a
// slightly enlarged cube; sampler-backed boundaries use their sample points.
CoverInfo compute_cover(const SimpleFunction& f, double h) {
  const int d = f.dim();
  const Box& dom = f.domain;
  std::vector<long> counts(d);
  for (int k = 0; k < d; ++k)
    counts[k] = std::max(1L, static_cast<long>(std::ceil(dom.side(k) / h - 1e-12)));

  std::set<std::vector<long>> cover;
  if (f.boundary_sampler) {
    for (const auto& p : f.boundary_sampler(h)) {
      std::vector<long> idx(d);
      bool inside = true;
      for (int k = 0; k < d; ++k) {
        long i = static_cast<long>(std::floor((p[k] - dom.lo[k]) / h));
        if (i < 0 || i >= counts[k] + 1) { inside = false; break; }
        idx[k] = std::min(i, counts[k] - 1);
      }
      if (inside) cover.insert(std::move(idx));
    }
  } else {
    // candidates: cubes within one cell of any region face
    std::set<std::vector<long>> candidates;
    auto add_face_range = [&](int axis, double v, const Box& b) {
      if (v < dom.lo[axis] - h || v > dom.hi[axis] + h) return;
      std::vector<long> lo_idx(d), hi_idx(d);
      for (int k = 0; k < d; ++k) {
        double flo = (k == axis) ? v : std::max(b.lo[k], dom.lo[k]);
        double fhi = (k == axis) ? v : std::min(b.hi[k], dom.hi[k]);
        lo_idx[k] = std::clamp(static_cast<long>(std::floor((flo - dom.lo[k]) / h)) - 1,
                               0L, counts[k] - 1);
        hi_idx[k] = std::clamp(static_cast<long>(std::floor((fhi - dom.lo[k]) / h)) + 1,
                               0L, counts[k] - 1);
      }
      std::vector<long> idx = lo_idx;
      for (;;) {
        candidates.insert(idx);
        int k = 0;
        for (; k < d; ++k) {
          if (++idx[k] <= hi_idx[k]) break;
          idx[k] = lo_idx[k];
        }
        if (k == d) break;
      }
    };
    for (const auto& r : f.regions)
      for (const auto& b : r.boxes)
        for (int k = 0; k < d; ++k) {
          add_face_range(k, b.lo[k], b);
          add_face_range(k, b.hi[k], b);
        }

    const double enlarge = 1e-9 * h;
    for (const auto& idx : candidates) {
      Point clo(d), chi(d);
      for (int k = 0; k < d; ++k) {
        clo[k] = std::max(dom.lo[k], dom.lo[k] + idx[k] * h - enlarge);
        chi[k] = std::min(dom.hi[k], dom.lo[k] + (idx[k] + 1) * h + enlarge);
      }
      if (count_classes(f, clo, chi, nullptr) >= 2) cover.insert(idx);
    }
  }

  CoverInfo info;
  info.cube_count = cover.size();
  info.planes.resize(d);
  std::vector<std::set<double>> faces(d);
  for (const auto& idx : cover)
    for (int k = 0; k < d; ++k) {
      faces[k].insert(dom.lo[k] + idx[k] * h);
      faces[k].insert(dom.lo[k] + (idx[k] + 1) * h);
    }
  for (int k = 0; k < d; ++k)
    info.planes[k].assign(faces[k].begin(), faces[k].end());
  return info;
}

}  // namespace

double CellDecomposition::removed_measure() const {
  double kept = 0.0;
  for (const auto& c : cells) kept += c.box.volume();
  return domain.volume() - kept;
}

CellDecomposition build_cover(const SimpleFunction& f, double h) {
  f.validate();
  if (!(h > 0.0)) throw std::invalid_argument("build_cover: h must be positive");
  const int d = f.dim();
  for (int k = 0; k < d; ++k)
    if (!std::isfinite(f.domain.side(k)))
      throw std::invalid_argument("build_cover: unbounded domain");

  CellDecomposition decomp;
  decomp.domain = f.domain;
  decomp.zeta = std::pow(h, d);

  CoverInfo cover = compute_cover(f, h);
  decomp.cover_count = cover.cube_count;
  decomp.grid = cover.planes;
  decomp.plane_counts.resize(d);
  for (int k = 0; k < d; ++k) decomp.plane_counts[k] = cover.planes[k].size();

  // per-axis intervals: kept spans alternating with (merged) strips
  struct Interval {
    double lo, hi;
    bool strip;
  };
  std::vector<std::vector<Interval>> axis_intervals(d);
  for (int k = 0; k < d; ++k) {
    std::vector<std::pair<double, double>> strips;
    for (double c : cover.planes[k]) {
      const double a = std::max(f.domain.lo[k], c - decomp.zeta);
      const double b = std::min(f.domain.hi[k], c + decomp.zeta);
      if (a < b) {
        if (!strips.empty() && a <= strips.back().second)
          strips.back().second = std::max(strips.back().second, b);
        else
          strips.emplace_back(a, b);
      }
    }
    double cursor = f.domain.lo[k];
    for (const auto& [a, b] : strips) {
      if (cursor < a) axis_intervals[k].push_back({cursor, a, false});
      axis_intervals[k].push_back({a, b, true});
      cursor = b;
    }
    if (cursor < f.domain.hi[k])
      axis_intervals[k].push_back({cursor, f.domain.hi[k], false});
    if (axis_intervals[k].empty())
      axis_intervals[k].push_back({f.domain.lo[k], f.domain.hi[k], false});
  }

  // walk the product grid
  std::vector<std::size_t> idx(d, 0);
  for (;;) {
    Point lo(d), hi(d);
    bool any_strip = false;
    for (int k = 0; k < d; ++k) {
      const auto& iv = axis_intervals[k][idx[k]];
      lo[k] = iv.lo;
      hi[k] = iv.hi;
      any_strip |= iv.strip;
    }
    Box box(lo, hi);
    if (any_strip) {
      decomp.removed.push_back(std::move(box));
    } else {
      int cls = -2;
      if (count_classes(f, lo, hi, &cls) >= 2)
        throw CellResolutionError(
            "build_cover: grid cell meets two region values; refine h", box);
      if (cls >= 0)
        decomp.cells.push_back({std::move(box), cls});
      else
        decomp.removed.push_back(std::move(box));
    }
    int k = 0;
    for (; k < d; ++k) {
      if (++idx[k] < axis_intervals[k].size()) break;
      idx[k] = 0;
    }
    if (k == d) break;
  }
  return decomp;
}

double estimate_box_dimension(const SimpleFunction& f,
                              const std::vector<double>& h_list) {
  if (h_list.size() < 3)
    throw std::invalid_argument("estimate_box_dimension: need at least 3 scales");
  std::vector<double> xs, ys;
  for (double h : h_list) {
    if (!(h > 0.0)) throw std::invalid_argument("estimate_box_dimension: h <= 0");
    const std::size_t n = compute_cover(f, h).cube_count;
    if (n == 0) continue;
    xs.push_back(std::log(1.0 / h));
    ys.push_back(std::log(static_cast<double>(n)));
  }
  if (xs.size() < 2) return 0.0;
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

ApproxParams ApproxParams::derive(const CellDecomposition& decomp, double eta_cap,
                                  double cr) {
  const int d = decomp.domain.dim();
  const double n = static_cast<double>(std::max<std::size_t>(1, decomp.cell_count()));
  ApproxParams p;
  p.h = 0.0;
  p.zeta = decomp.zeta;
  p.cr = cr;
  p.eta = std::min(eta_cap, 0.45 / n);
  const double stretch = std::sqrt((d - 1) + std::pow(1.0 + 8.0 / p.zeta, 2.0));
  p.delta = 0.9 * std::min(p.zeta / (8.0 * n), p.eta / stretch);
  if (decomp.cover_count > 0)
    p.delta = std::min(p.delta, cr * p.zeta / static_cast<double>(decomp.cover_count));
  p.nu = p.eta;
  p.validate(d, decomp.cell_count(), decomp.cover_count);
  return p;
}

void ApproxParams::validate(int dim, std::size_t n_cells, std::size_t n_gamma) const {
  const double n = static_cast<double>(std::max<std::size_t>(1, n_cells));
  if (!(zeta > 0.0)) throw std::invalid_argument("params: zeta <= 0");
  if (!(eta > 0.0) || !(eta < 1.0 / n))
    throw std::invalid_argument("params: eta must lie in (0, 1/N)");
  if (!(delta > 0.0)) throw std::invalid_argument("params: delta <= 0");
  if (!(delta < zeta / (8.0 * n)))
    throw std::invalid_argument("params: delta must be < zeta/(8N)");
  if (n_gamma > 0 && !(delta <= cr * zeta / static_cast<double>(n_gamma)))
    throw std::invalid_argument("params: delta must be <= cr*zeta/N_Gamma");
  const double stretch2 = (dim - 1) + std::pow(1.0 + 8.0 / zeta, 2.0);
  if (!(delta * delta <= eta * eta / stretch2))
    throw std::invalid_argument("params: delta^2 exceeds eta^2 / ((d-1)+(1+8/zeta)^2)");
}

// ---------------------------------------------------------------------------
// The compression construction
// ---------------------------------------------------------------------------

namespace {

class LemmaBuilder {
 public:
  LemmaBuilder(int dim, std::vector<TrackedBox> boxes)
      : d_(dim), schedule_(dim), boxes_(std::move(boxes)) {}

  const ControlSchedule& schedule() const { return schedule_; }
  const std::vector<TrackedBox>& boxes() const { return boxes_; }

  // Step 1 of the lemma.
  void compression_phase(const CellDecomposition& decomp, const ApproxParams& p,
                         const std::vector<Point>& targets);
  // Step 2 of the lemma.
  void ordering_phase(const std::vector<Point>& targets, double eta);

 private:
  void emit(ElementaryControl e) {
    if (e.tau < kMinTau) return;
    e.motion.resize(d_, 0.0);
    schedule_.push(e);
    ControlSchedule one(d_);
    one.push(e);
    boxes_ = propagate_boxes(std::move(boxes_), one);
  }

  // Contraction onto {x^axis = c} acting on the chosen side until every
  // active cell is within `within` of the plane. Returns false if nothing
  // needed to move.
  bool contract_onto(int axis, double c, int side_sign, double within);
  // Translation across {x^axis = c} (active side by sign) along `direction`
  // for duration tau.
  void translate(int axis, double c, int sign, int move_axis, double speed,
                 double tau);

  double cell_extreme(int axis, bool want_max, int side_sign, double c) const;
  bool any_active_cell(int axis, int sign, double c) const;

  int d_;
  ControlSchedule schedule_;
  std::vector<TrackedBox> boxes_;
};

bool LemmaBuilder::any_active_cell(int axis, int sign, double c) const {
  for (const auto& tb : boxes_) {
    if (tb.cell_id < 0) continue;
    if (sign > 0 ? tb.box.hi[axis] > c : tb.box.lo[axis] < c) return true;
  }
  return false;
}

double LemmaBuilder::cell_extreme(int axis, bool want_max, int side_sign,
                                  double c) const {
  double best = want_max ? -std::numeric_limits<double>::infinity()
                         : std::numeric_limits<double>::infinity();
  for (const auto& tb : boxes_) {
    if (tb.cell_id < 0) continue;
    const bool active = side_sign > 0 ? tb.box.lo[axis] >= c : tb.box.hi[axis] <= c;
    if (!active) continue;
    const double v = want_max ? tb.box.hi[axis] : tb.box.lo[axis];
    best = want_max ? std::max(best, v) : std::min(best, v);
  }
  return best;
}

bool LemmaBuilder::contract_onto(int axis, double c, int side_sign, double within) {
  // farthest active-side cell corner from the plane
  double far = 0.0;
  for (const auto& tb : boxes_) {
    if (tb.cell_id < 0) continue;
    if (side_sign > 0) {
      if (tb.box.lo[axis] >= c) far = std::max(far, tb.box.hi[axis] - c);
    } else {
      if (tb.box.hi[axis] <= c) far = std::max(far, c - tb.box.lo[axis]);
    }
  }
  if (far <= within) return false;
  ElementaryControl e;
  e.axis = axis;
  e.sign = side_sign;
  e.offset = c;
  e.motion.assign(d_, 0.0);
  e.motion[axis] = side_sign > 0 ? -1.0 : 1.0;  // toward the plane
  e.tau = kSafety * std::log(far / within);
  emit(e);
  return true;
}

void LemmaBuilder::translate(int axis, double c, int sign, int move_axis,
                             double speed, double tau) {
  ElementaryControl e;
  e.axis = axis;
  e.sign = sign;
  e.offset = c;
  e.motion.assign(d_, 0.0);
  e.motion[move_axis] = speed;
  e.tau = tau;
  emit(e);
}

void LemmaBuilder::compression_phase(const CellDecomposition& decomp,
                                     const ApproxParams& p,
                                     const std::vector<Point>& targets) {
  const double delta = p.delta;
  const double zeta = p.zeta;
  const std::size_t n_cells = decomp.cell_count();
  const int sink_axis = d_ - 1;

  // 1.1: per coordinate k < d-1, walk the hyperplanes left to right.
  // Everything left of the plane compresses onto it; the accumulated pile is
  // then pushed down in the last coordinate below the still-frozen cells, so
  // cells from different slabs stay distinguishable after the axis collapses.
  for (int k = 0; k + 1 < d_; ++k) {
    for (double c : decomp.grid[k]) {
      contract_onto(k, c, -1, delta);
      const bool have_left = any_active_cell(k, -1, c + 0.25 * zeta) &&
                             cell_extreme(k, true, -1, c + 0.25 * zeta) <
                                 std::numeric_limits<double>::infinity();
      const bool have_right = any_active_cell(k, +1, c + 0.25 * zeta);
      if (have_left && have_right) {
        const double top_active = cell_extreme(sink_axis, true, -1,
                                               std::numeric_limits<double>::infinity());
        // lowest point of the cells frozen for this plane
        double frozen_min = std::numeric_limits<double>::infinity();
        for (const auto& tb : boxes_) {
          if (tb.cell_id < 0) continue;
          if (tb.box.lo[k] >= c + 0.25 * zeta)
            frozen_min = std::min(frozen_min, tb.box.lo[sink_axis]);
        }
        double moving_top = -std::numeric_limits<double>::infinity();
        double u_min = std::numeric_limits<double>::infinity();
        for (const auto& tb : boxes_) {
          if (tb.cell_id < 0) continue;
          if (tb.box.hi[k] <= c + 0.25 * zeta) {
            moving_top = std::max(moving_top, tb.box.hi[sink_axis]);
            u_min = std::min(u_min, (c + 0.25 * zeta) - tb.box.hi[k]);
          }
        }
        (void)top_active;
        if (std::isfinite(frozen_min) && std::isfinite(moving_top) &&
            u_min > 0.0 && std::isfinite(u_min)) {
          const double drop = moving_top - (frozen_min - zeta);
          if (drop > 0.0)
            translate(k, c + 0.25 * zeta, -1, sink_axis, -1.0,
                      kSafety * drop / u_min);
        }
      }
    }
    // collapse whatever is right of the last plane (k = 0 is collapsed by the
    // move away from the targets below)
    if (k >= 1) {
      double top = -std::numeric_limits<double>::infinity();
      for (const auto& tb : boxes_)
        if (tb.cell_id >= 0) top = std::max(top, tb.box.hi[k]);
      if (std::isfinite(top)) contract_onto(k, top + 0.25 * zeta, -1, delta);
    }
  }

  // Move away from the targets: everything gathers at x1 = c_away, strictly
  // to the right of every target first coordinate.
  double span = 0.0;
  for (const auto& a : targets)
    for (const auto& b : targets) span = std::max(span, euclidean_distance(a, b));
  for (const auto& a : targets) span = std::max(span, sup_norm(a) * 0.0 + euclidean_distance(a, Point(d_, 0.0)));
  const double c_away = span + 1.0;
  contract_onto(0, c_away, -1, delta);
  contract_onto(0, c_away, +1, delta);

  if (n_cells == 0) return;

  // 1.2: last coordinate. The cells now sit stacked in x^d; compress the
  // stack group by group onto separating planes and push each group along
  // x1 by 2/N, which converts the stack into horizontal spacing >= 1/N.
  std::vector<std::size_t> order;  // indices into boxes_, top to bottom
  {
    std::vector<std::pair<double, std::size_t>> tops;
    for (std::size_t i = 0; i < boxes_.size(); ++i)
      if (boxes_[i].cell_id >= 0)
        tops.emplace_back(-boxes_[i].box.hi[sink_axis], i);
    std::sort(tops.begin(), tops.end());
    for (const auto& [neg_top, i] : tops) order.push_back(i);
    for (std::size_t r = 0; r + 1 < order.size(); ++r) {
      if (!(boxes_[order[r]].box.lo[sink_axis] >
            boxes_[order[r + 1]].box.hi[sink_axis]))
        throw std::runtime_error(
            "compression: stacking degenerate, refine delta/zeta");
    }
  }

  const double n = static_cast<double>(n_cells);
  const double push_tau = 8.0 / (n * zeta);
  for (std::size_t r = 0; r < order.size(); ++r) {
    const Box& cur = boxes_[order[r]].box;
    double plane;
    if (r + 1 < order.size()) {
      const Box& below = boxes_[order[r + 1]].box;
      plane = 0.5 * (cur.lo[sink_axis] + below.hi[sink_axis]);
      if (!(cur.lo[sink_axis] - below.hi[sink_axis] > 0.5 * zeta))
        throw std::runtime_error("compression: stack gap below zeta/2, refine delta");
    } else {
      plane = cur.lo[sink_axis] - 0.25 * zeta;
    }
    contract_onto(sink_axis, plane, +1, delta);
    translate(sink_axis, plane - 0.25 * zeta, +1, 0, +1.0, push_tau);
  }

  // park the stack at a fixed height so the final position does not inherit
  // the N-dependent downward drift
  contract_onto(sink_axis, 0.0, -1, delta);
  contract_onto(sink_axis, 0.0, +1, delta);
}

void LemmaBuilder::ordering_phase(const std::vector<Point>& targets, double eta) {
  const int band_axis = 1;  // the working transverse coordinate of step 2

  auto cell_band = [&]() {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& tb : boxes_) {
      if (tb.cell_id < 0) continue;
      lo = std::min(lo, tb.box.lo[band_axis]);
      hi = std::max(hi, tb.box.hi[band_axis]);
    }
    return std::pair<double, double>(lo, hi);
  };

  std::vector<std::size_t> cell_order;
  for (std::size_t i = 0; i < boxes_.size(); ++i)
    if (boxes_[i].cell_id >= 0) cell_order.push_back(i);

  for (std::size_t q = 0; q < cell_order.size(); ++q) {
    const std::size_t bi = cell_order[q];
    const int target_id = boxes_[bi].cell_id;
    const Point& alpha = targets[target_id];

    auto [band_lo, band_hi] = cell_band();
    const double line = band_lo - 1.0;
    const Box cell_now = boxes_[bi].box;
    const double dl = 0.5 * (cell_now.lo[0] + cell_now.hi[0]);

    // the recursion invariant: no other target's first coordinate inside the
    // pending cell's first-coordinate window
    for (std::size_t m = 0; m < targets.size(); ++m) {
      if (static_cast<int>(m) == target_id) continue;
      if (targets[m][0] >= cell_now.lo[0] - eta && targets[m][0] <= cell_now.hi[0] + eta)
        throw std::runtime_error(
            "ordering: foreign target first coordinate inside a pending cell window");
    }
    if (!(cell_now.lo[0] > dl - eta && cell_now.hi[0] < dl + eta))
      throw std::runtime_error("ordering: cell wider than its eta window");

    // Sep1/Sep2: sink everything beyond dl +- eta below the line. A point at
    // horizontal distance >= eta from the plane travels at speed >= eta.
    double content_top = -std::numeric_limits<double>::infinity();
    double content_bot = std::numeric_limits<double>::infinity();
    for (const auto& tb : boxes_) {
      content_top = std::max(content_top, tb.box.hi[band_axis]);
      content_bot = std::min(content_bot, tb.box.lo[band_axis]);
    }
    const double drop = content_top - line + 0.25 * eta;
    const double sep_tau = kSafety * drop / eta;
    translate(0, dl + eta, +1, band_axis, -1.0, sep_tau);
    translate(0, dl - eta, -1, band_axis, -1.0, sep_tau);

    // Mov: only the slab around the cell is still above the line; translate
    // it so the cell's center lands exactly on the target's first coordinate.
    const Box cell_mid = boxes_[bi].box;
    const double center1 = 0.5 * (cell_mid.lo[0] + cell_mid.hi[0]);
    const double u_center = 0.5 * (cell_mid.lo[band_axis] + cell_mid.hi[band_axis]) - line;
    if (!(u_center > 0.0))
      throw std::runtime_error("ordering: cell sank below its own moving line");
    const double shift = alpha[0] - center1;
    if (shift != 0.0)
      translate(band_axis, line, +1, 0, shift >= 0.0 ? 1.0 : -1.0,
                std::abs(shift) / u_center);

    // Cont: pull everything back up into an eta-thin band.
    double top = -std::numeric_limits<double>::infinity();
    double bot = std::numeric_limits<double>::infinity();
    for (const auto& tb : boxes_) {
      top = std::max(top, tb.box.hi[band_axis]);
      bot = std::min(bot, tb.box.lo[band_axis]);
    }
    const double c_cont = top + 0.25 * eta;
    const double far = c_cont - bot;
    if (far > 0.25 * eta) {
      ElementaryControl e;
      e.axis = band_axis;
      e.sign = -1;
      e.offset = c_cont;
      e.motion.assign(d_, 0.0);
      e.motion[band_axis] = 1.0;
      e.tau = kSafety * std::log(far / (0.25 * eta));
      emit(e);
    }
  }
}

std::vector<TrackedBox> initial_boxes(const CellDecomposition& decomp) {
  std::vector<TrackedBox> boxes;
  boxes.reserve(decomp.cells.size() + decomp.removed.size());
  for (std::size_t l = 0; l < decomp.cells.size(); ++l)
    boxes.push_back({decomp.cells[l].box, static_cast<int>(l)});
  for (const auto& b : decomp.removed) boxes.push_back({b, -1});
  return boxes;
}

void check_target_preconditions(const CellDecomposition& decomp,
                                const std::vector<Point>& targets) {
  for (const auto& c : decomp.cells)
    if (c.target < 0 || c.target >= static_cast<int>(targets.size()))
      throw std::invalid_argument("compression: cell target out of range");
  for (std::size_t i = 0; i < targets.size(); ++i)
    for (std::size_t j = i + 1; j < targets.size(); ++j)
      if (targets[i][0] == targets[j][0])
        throw std::invalid_argument(
            "compression: target first coordinates must be pairwise distinct");
}

}  // namespace

ControlSchedule compression_schedule(const CellDecomposition& decomp,
                                     const ApproxParams& params,
                                     const std::vector<Point>& targets) {
  const int d = decomp.domain.dim();
  if (d < 2) throw std::invalid_argument("compression: d >= 2 required");
  check_target_preconditions(decomp, targets);
  params.validate(d, decomp.cell_count(), decomp.cover_count);

  // targets of cells get mapped onto the lemma's per-cell target list
  std::vector<Point> cell_targets;
  cell_targets.reserve(decomp.cells.size());

  LemmaBuilder builder(d, initial_boxes(decomp));
  // builder tracks boxes with cell ids; map each cell id to its target point
  std::vector<Point> by_cell(decomp.cells.size());
  for (std::size_t l = 0; l < decomp.cells.size(); ++l)
    by_cell[l] = targets[decomp.cells[l].target];
  builder.compression_phase(decomp, params, targets);
  return builder.schedule();
}

ControlSchedule ordering_grouping_schedule(
    const std::vector<std::pair<Box, int>>& cell_images,
    const std::vector<Point>& targets, double eta) {
  if (cell_images.empty()) return ControlSchedule();
  const int d = cell_images[0].first.dim();
  std::vector<TrackedBox> boxes;
  std::vector<Point> by_cell;
  for (const auto& [box, target] : cell_images) {
    if (target < 0 || target >= static_cast<int>(targets.size()))
      throw std::invalid_argument("ordering: target index out of range");
    boxes.push_back({box, static_cast<int>(by_cell.size())});
    by_cell.push_back(targets[target]);
  }
  LemmaBuilder builder(d, std::move(boxes));
  builder.ordering_phase(by_cell, eta);
  return builder.schedule();
}

LemmaResult run_compression_lemma(const CellDecomposition& decomp,
                                  const ApproxParams& params,
                                  const std::vector<Point>& targets) {
  const int d = decomp.domain.dim();
  if (d < 2) throw std::invalid_argument("compression: d >= 2 required");
  check_target_preconditions(decomp, targets);
  params.validate(d, decomp.cell_count(), decomp.cover_count);

  std::vector<Point> by_cell(decomp.cells.size());
  for (std::size_t l = 0; l < decomp.cells.size(); ++l)
    by_cell[l] = targets[decomp.cells[l].target];

  LemmaBuilder builder(d, initial_boxes(decomp));
  builder.compression_phase(decomp, params, targets);
  builder.ordering_phase(by_cell, params.eta);

  LemmaResult out;
  out.schedule = builder.schedule();
  out.boxes = builder.boxes();
  for (const auto& tb : out.boxes) {
    double corner = 0.0;
    for (int k = 0; k < d; ++k)
      corner += std::pow(std::max(std::abs(tb.box.lo[k]), std::abs(tb.box.hi[k])), 2.0);
    out.measured_k = std::max(out.measured_k, std::sqrt(corner));
    if (tb.cell_id >= 0) {
      const double t1 = by_cell[tb.cell_id][0];
      const double dev = std::max(std::abs(tb.box.lo[0] - t1), std::abs(tb.box.hi[0] - t1));
      out.measured_c = std::max(out.measured_c, dev / params.eta);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Theorem-4 pipeline and the quadrature certificate
// ---------------------------------------------------------------------------

L2Report l2_error_report(const SimpleFunction& f, const ControlSchedule& s,
                         double grid_step, const CellDecomposition* decomp) {
  if (!(grid_step > 0.0)) throw std::invalid_argument("l2_error: grid_step <= 0");
  const int d = f.dim();
  const Box& dom = f.domain;
  std::vector<std::size_t> counts(d);
  std::size_t total = 1;
  double cell_vol = 1.0;
  for (int k = 0; k < d; ++k) {
    counts[k] = std::max<std::size_t>(1, static_cast<std::size_t>(
                                             std::ceil(dom.side(k) / grid_step)));
    total *= counts[k];
    cell_vol *= dom.side(k) / static_cast<double>(counts[k]);
  }

  const std::size_t n_chunks = 64;
  std::vector<double> sum(n_chunks, 0.0), removed_sum(n_chunks, 0.0);
  parallel_chunks(total, n_chunks, [&](std::size_t chunk, std::size_t b, std::size_t e) {
    Point x(d);
    for (std::size_t flat = b; flat < e; ++flat) {
      std::size_t rest = flat;
      for (int k = 0; k < d; ++k) {
        const std::size_t i = rest % counts[k];
        rest /= counts[k];
        x[k] = dom.lo[k] + (static_cast<double>(i) + 0.5) * dom.side(k) /
                               static_cast<double>(counts[k]);
      }
      const Point phi = flow_point(x, s);
      const Point fx = f.value_at(x);
      double err2 = 0.0;
      for (int k = 0; k < d; ++k) err2 += (phi[k] - fx[k]) * (phi[k] - fx[k]);
      sum[chunk] += err2 * cell_vol;
      if (decomp) {
        bool in_cell = false;
        for (const auto& c : decomp->cells)
          if (c.box.contains(x)) {
            in_cell = true;
            break;
          }
        if (!in_cell) removed_sum[chunk] += err2 * cell_vol;
      }
    }
  });

  L2Report rep;
  rep.grid_points = total;
  double s2 = 0.0, r2 = 0.0;
  for (std::size_t c = 0; c < n_chunks; ++c) {
    s2 += sum[c];
    r2 += removed_sum[c];
  }
  rep.total = std::sqrt(s2);
  rep.removed_part = std::sqrt(r2);
  return rep;
}

double l2_error(const SimpleFunction& f, const ControlSchedule& s, double grid_step) {
  return l2_error_report(f, s, grid_step).total;
}

namespace {

// Distinct region values in first-appearance order, and the value index of
// every region.
std::pair<std::vector<Point>, std::vector<int>> dedup_values(const SimpleFunction& f) {
  std::vector<Point> values;
  std::vector<int> region_to_value(f.regions.size());
  for (std::size_t m = 0; m < f.regions.size(); ++m) {
    const Point& v = f.regions[m].value;
    int found = -1;
    for (std::size_t q = 0; q < values.size(); ++q)
      if (values[q] == v) {
        found = static_cast<int>(q);
        break;
      }
    if (found < 0) {
      found = static_cast<int>(values.size());
      values.push_back(v);
    }
    region_to_value[m] = found;
  }
  return {values, region_to_value};
}

}  // namespace

ControlSchedule synthesize_approximator(const SimpleFunction& f, double eps,
                                        double horizon,
                                        ApproxCertificate* certificate) {
  f.validate();
  if (!(eps > 0.0)) throw std::invalid_argument("approximator: eps <= 0");
  if (!(horizon > 0.0)) throw std::invalid_argument("approximator: horizon <= 0");
  const int d = f.dim();
  if (d < 2) throw std::invalid_argument("approximator: d >= 2 required");
  if (f.regions.empty()) throw std::invalid_argument("approximator: no regions");

  auto [values, region_to_value] = dedup_values(f);
  PreparedTargets prep = prepare_targets(values);

  const double measure = f.domain.volume();
  const double nu_target = 0.45 * eps / std::sqrt(measure);
  const double fine_step = std::min(0.01, f.domain.side(0) * 0.005);

  double side_min = f.domain.side(0);
  for (int k = 1; k < d; ++k) side_min = std::min(side_min, f.domain.side(k));
  double h = side_min / 4.0;

  std::string last_failure = "no attempt";
  for (int attempt = 0; attempt < 10; ++attempt, h *= 0.5) {
    CellDecomposition decomp;
    try {
      decomp = build_cover(f, h);
    } catch (const CellResolutionError&) {
      last_failure = "unresolved cells at h=" + std::to_string(h);
      continue;
    }
    // retarget cells onto the deduplicated value list
    for (auto& cell : decomp.cells) cell.target = region_to_value[cell.target];

    double eta_cap = nu_target / 4.0;
    for (int eta_round = 0; eta_round < 4; ++eta_round, eta_cap *= 0.5) {
      ApproxParams params;
      LemmaResult lemma;
      try {
        params = ApproxParams::derive(decomp, eta_cap);
        params.eps = eps;
        params.h = h;
        lemma = run_compression_lemma(decomp, params, prep.pulled_back);
      } catch (const std::exception& ex) {
        last_failure = ex.what();
        continue;
      }

      // cluster representatives, one per value actually used
      std::vector<int> value_used(values.size(), 0);
      std::vector<Box> cluster(values.size());
      for (const auto& tb : lemma.boxes) {
        if (tb.cell_id < 0) continue;
        const int v = decomp.cells[tb.cell_id].target;
        cluster[v] = value_used[v] ? Box::hull(cluster[v], tb.box) : tb.box;
        value_used[v] = 1;
      }
      std::vector<Point> reps, rep_targets;
      for (std::size_t v = 0; v < values.size(); ++v)
        if (value_used[v]) {
          reps.push_back(cluster[v].center());
          rep_targets.push_back(prep.pulled_back[v]);
        }

      ControlSchedule full;
      try {
        ControlSchedule tail = reps.empty()
                                   ? ControlSchedule(d)
                                   : synthesize_simcontrol(reps, rep_targets, 1.0);
        tail = concat(tail, prep.suffix);
        // certify that no cell is ever sliced by the finishing stages
        propagate_boxes(lemma.boxes, tail);
        full = concat(lemma.schedule, tail);
      } catch (const std::exception& ex) {
        last_failure = ex.what();
        continue;
      }

      const double probe_step = std::max(fine_step, h / 4.0);
      if (l2_error(f, full, probe_step) >= 0.9 * eps) {
        last_failure = "probe quadrature above eps at h=" + std::to_string(h);
        break;  // refine h, not eta
      }
      L2Report fine = l2_error_report(f, full, fine_step, &decomp);
      if (fine.total < eps) {
        ControlSchedule out = rescale(full, horizon);
        if (certificate) {
          const ScheduleMetrics metrics = schedule_metrics(out);
          certificate->l2_error = fine.total;
          certificate->removed_part = fine.removed_part;
          certificate->eps = eps;
          certificate->h = h;
          certificate->zeta = params.zeta;
          certificate->delta = params.delta;
          certificate->eta = params.eta;
          certificate->switches = metrics.switches;
          certificate->sup_norm_w = metrics.sup_norm_w;
          certificate->sup_norm_b = metrics.sup_norm_b;
          certificate->measured_c = lemma.measured_c;
          certificate->measured_k = lemma.measured_k;
        }
        return out;
      }
      last_failure = "certified error " + std::to_string(fine.total) + " >= eps";
      break;  // refine h
    }
  }
  throw std::runtime_error("synthesize_approximator: could not certify eps=" +
                           std::to_string(eps) + " (" + last_failure + ")");
}

}  // namespace nodectrl
