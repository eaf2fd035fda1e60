#include "nodectrl/control.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include <json.hpp>

namespace nodectrl {

void ElementaryControl::validate() const {
  const int d = dim();
  if (d < 1) throw std::invalid_argument("segment: empty motion vector");
  if (axis < 0 || axis >= d) throw std::invalid_argument("segment: axis out of range");
  if (sign != 1 && sign != -1) throw std::invalid_argument("segment: sign must be +-1");
  if (!(tau > 0.0) || !std::isfinite(tau))
    throw std::invalid_argument("segment: duration must be positive");
  if (!std::isfinite(offset)) throw std::invalid_argument("segment: non-finite offset");
  if (!all_finite(motion)) throw std::invalid_argument("segment: non-finite motion");
}

double ControlSchedule::total_time() const {
  double t = 0.0;
  for (const auto& e : segments) t += e.tau;
  return t;
}

void ControlSchedule::push(ElementaryControl e) {
  e.validate();
  if (dim == 0) dim = e.dim();
  if (e.dim() != dim) throw std::invalid_argument("schedule: segment dimension mismatch");
  segments.push_back(std::move(e));
}

ControlSchedule concat(const ControlSchedule& a, const ControlSchedule& b) {
  if (a.dim != 0 && b.dim != 0 && a.dim != b.dim)
    throw std::invalid_argument("concat: dimension mismatch");
  ControlSchedule out(a.dim != 0 ? a.dim : b.dim);
  out.segments = a.segments;
  out.segments.insert(out.segments.end(), b.segments.begin(), b.segments.end());
  return out;
}

ControlSchedule rescale(const ControlSchedule& s, double t_new) {
  if (!(t_new > 0.0)) throw std::invalid_argument("rescale: horizon must be positive");
  const double t_old = s.total_time();
  if (s.empty() || t_old == t_new) return s;
  const double ratio = t_new / t_old;
  ControlSchedule out(s.dim);
  for (auto e : s.segments) {
    e.tau *= ratio;
    for (double& w : e.motion) w /= ratio;
    out.segments.push_back(std::move(e));
  }
  return out;
}

ScheduleMetrics schedule_metrics(const ControlSchedule& s) {
  ScheduleMetrics m;
  m.switches = s.segments.size();
  m.total_time = s.total_time();
  for (const auto& e : s.segments) {
    m.sup_norm_w = std::max(m.sup_norm_w, sup_norm(e.motion));
    m.sup_norm_b = std::max(m.sup_norm_b, std::abs(e.offset));
  }
  return m;
}

namespace {

void append_double(std::string& out, double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  out.append(buf, res.ptr);
}

}  // namespace

std::string schedule_to_json(const ControlSchedule& s) {
  for (const auto& e : s.segments)
    if (!e.activation.is_relu())
      throw std::invalid_argument("schedule_to_json: custom activations do not serialize");
  std::string out;
  out += "{\"d\":" + std::to_string(s.dim) + ",\"T\":";
  append_double(out, s.total_time());
  out += ",\"segments\":[";
  for (std::size_t i = 0; i < s.segments.size(); ++i) {
    const auto& e = s.segments[i];
    if (i) out += ',';
    out += "{\"k\":" + std::to_string(e.axis + 1);  // 1-based in the file format
    out += ",\"s\":" + std::to_string(e.sign);
    out += ",\"c\":";
    append_double(out, e.offset);
    out += ",\"w\":[";
    for (std::size_t j = 0; j < e.motion.size(); ++j) {
      if (j) out += ',';
      append_double(out, e.motion[j]);
    }
    out += "],\"tau\":";
    append_double(out, e.tau);
    out += '}';
  }
  out += "]}\n";
  return out;
}

ControlSchedule schedule_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  ControlSchedule s(j.at("d").get<int>());
  for (const auto& je : j.at("segments")) {
    ElementaryControl e;
    e.axis = je.at("k").get<int>() - 1;
    e.sign = je.at("s").get<int>();
    e.offset = je.at("c").get<double>();
    e.motion = je.at("w").get<std::vector<double>>();
    e.tau = je.at("tau").get<double>();
    s.push(std::move(e));
  }
  if (j.contains("T")) {
    const double t = j.at("T").get<double>();
    if (std::abs(t - s.total_time()) > 1e-9 * std::max(1.0, std::abs(t)))
      throw std::invalid_argument("schedule_from_json: T inconsistent with segment durations");
  }
  return s;
}

}  // namespace nodectrl
