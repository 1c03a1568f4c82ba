#pragma once

// Closed chart polylines, winding numbers, and segment intersections.

#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "systole/conformal_metric.hpp"
#include "systole/random.hpp"

namespace systole {

/// Closed polyline in the chart; segment i joins vertex i to vertex i+1 (mod n).
/// The loop parameter s in [0, n) counts segments from the basepoint.
struct PolyLoop {
  std::vector<Complex> vertices;
  std::size_t basepoint_index = 0;
  /// Per segment (indexed like vertices): id of the curve it came from, -1 if none.
  std::vector<int> arc_tags;
  std::optional<double> metric_length;

  std::size_t size() const { return vertices.size(); }
  Complex basepoint() const { return vertices[basepoint_index]; }
  /// Vertex at offset k from the basepoint.
  Complex at(std::size_t k) const { return vertices[(basepoint_index + k) % vertices.size()]; }
  int tag(std::size_t k) const {
    if (arc_tags.empty()) return -1;
    return arc_tags[(basepoint_index + k) % vertices.size()];
  }
  /// Point at loop parameter s (relative to the basepoint).
  Complex point(double s) const {
    const std::size_t n = size();
    double k = std::floor(s);
    const double t = s - k;
    const std::size_t i = static_cast<std::size_t>(k) % n;
    return at(i) + t * (at(i + 1) - at(i));
  }
};

/// Copy with basepoint_index 0; tags and cached length carried along.
inline PolyLoop rebased(const PolyLoop& loop) {
  PolyLoop out;
  for (std::size_t k = 0; k < loop.size(); ++k) {
    out.vertices.push_back(loop.at(k));
    if (!loop.arc_tags.empty()) out.arc_tags.push_back(loop.tag(k));
  }
  out.metric_length = loop.metric_length;
  return out;
}

inline PolyLoop make_loop(std::vector<Complex> vertices, int tag = -1) {
  PolyLoop l;
  l.arc_tags.assign(vertices.size(), tag);
  l.vertices = std::move(vertices);
  return l;
}

inline PolyLoop reversed(const PolyLoop& loop) {
  const PolyLoop b = rebased(loop);
  PolyLoop out;
  const std::size_t n = b.size();
  out.vertices.push_back(b.vertices[0]);
  for (std::size_t k = n - 1; k >= 1; --k) out.vertices.push_back(b.vertices[k]);
  if (!b.arc_tags.empty())
    for (std::size_t k = 0; k < n; ++k) out.arc_tags.push_back(b.arc_tags[(2 * n - 1 - k) % n]);
  out.metric_length = b.metric_length;
  return out;
}

inline PolyLoop conjugated(const PolyLoop& loop) {
  PolyLoop out = loop;
  for (auto& v : out.vertices) v = std::conj(v);
  return out;
}

inline Curve loop_curve(const PolyLoop& loop) {
  Curve c;
  c.closed = true;
  c.kind = SegmentKind::chart_linear;
  for (std::size_t k = 0; k < loop.size(); ++k) c.samples.push_back(loop.at(k));
  return c;
}

/// f-length of one straight chart segment.
inline double segment_length(const ConformalFactor& f, Complex p, Complex q, double tol = 1e-12) {
  if (p == q) return 0.0;
  Curve c;
  c.kind = SegmentKind::chart_linear;
  c.samples = {p, q};
  return curve_length(f, c, tol);
}

/// Per-segment f-lengths (indexed from the basepoint) and their prefix sums.
struct LoopMetric {
  std::vector<double> segments;
  std::vector<double> prefix;  // prefix[k] = length of segments [0, k)

  double total() const { return prefix.back(); }
};

inline LoopMetric loop_metric(const ConformalFactor& f, const PolyLoop& loop) {
  LoopMetric m;
  const std::size_t n = loop.size();
  m.segments.resize(n);
  for (std::size_t k = 0; k < n; ++k) m.segments[k] = segment_length(f, loop.at(k), loop.at(k + 1));
  m.prefix.assign(n + 1, 0.0);
  CompensatedSum s;
  for (std::size_t k = 0; k < n; ++k) {
    s.add(m.segments[k]);
    m.prefix[k + 1] = s.value();
  }
  return m;
}

inline double loop_length(const ConformalFactor& f, const PolyLoop& loop) { return loop_metric(f, loop).total(); }

inline PolyLoop with_length(PolyLoop loop, const ConformalFactor& f) {
  loop.metric_length = loop_length(f, loop);
  return loop;
}

// ---------------------------------------------------------------------------
// Winding numbers.

inline double point_segment_distance(Complex s, Complex p, Complex q) {
  const Complex d = q - p;
  const double len2 = std::norm(d);
  const double t = len2 > 0.0 ? std::clamp((std::conj(d) * (s - p)).real() / len2, 0.0, 1.0) : 0.0;
  return std::abs(s - (p + t * d));
}

inline double distance_to_loop(const PolyLoop& loop, Complex s) {
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < loop.size(); ++k) d = std::min(d, point_segment_distance(s, loop.at(k), loop.at(k + 1)));
  return d;
}

/// Sum of signed angles subtended by the segments, over 2 pi, rounded.
inline int winding_number(const PolyLoop& loop, Complex s) {
  if (distance_to_loop(loop, s) < 1e-9) fail(ErrorKind::point_on_loop, "labeled point lies on the loop");
  double total = 0.0;
  for (std::size_t k = 0; k < loop.size(); ++k) total += std::arg((loop.at(k + 1) - s) / (loop.at(k) - s));
  const double w = total / kTwoPi;
  const double r = std::round(w);
  if (std::abs(w - r) > 0.01) fail(ErrorKind::point_on_loop, "winding residual too large");
  return static_cast<int>(r);
}

struct LabeledPoint {
  int id = 0;
  Complex z;
};
using PointSet = std::vector<LabeledPoint>;

struct WindingProfile {
  std::map<int, int> winding;
  std::set<int> odd_set;

  bool odd() const { return odd_set.size() % 2 == 1; }
};

inline WindingProfile winding_profile(const PolyLoop& loop, const PointSet& S) {
  WindingProfile p;
  for (const auto& s : S) {
    const int w = winding_number(loop, s.z);
    p.winding[s.id] = w;
    if (w % 2 != 0) p.odd_set.insert(s.id);
  }
  return p;
}

// ---------------------------------------------------------------------------
// Segment intersections.

struct SegmentCrossing {
  Complex location;
  double s = 0.0;  // parameter on the first segment, in (0, 1)
  double t = 0.0;  // parameter on the second segment
};

inline constexpr double kMinCrossingAngle = 1e-4;
inline constexpr double kEndpointTolerance = 1e-12;

/// Transverse crossing of [p, q] and [a, b], if any; throws on tangency,
/// overlap, an endpoint landing on the other segment, or angle below 1e-4.
inline std::optional<SegmentCrossing> segment_crossing(Complex p, Complex q, Complex a, Complex b) {
  const Complex d1 = q - p, d2 = b - a;
  const double denom = (std::conj(d1) * d2).imag();
  const double l1 = std::abs(d1), l2 = std::abs(d2);
  if (l1 == 0.0 || l2 == 0.0) return std::nullopt;
  // Quick reject on bounding boxes.
  if (std::max(p.real(), q.real()) < std::min(a.real(), b.real()) ||
      std::max(a.real(), b.real()) < std::min(p.real(), q.real()) ||
      std::max(p.imag(), q.imag()) < std::min(a.imag(), b.imag()) ||
      std::max(a.imag(), b.imag()) < std::min(p.imag(), q.imag()))
    return std::nullopt;
  const Complex e = a - p;
  const double sin_angle = denom / (l1 * l2);
  if (std::abs(sin_angle) < 1e-14) {
    // Parallel: overlapping collinear segments are non-transverse.
    if (std::abs((std::conj(d1) * e).imag()) / l1 < 1e-12) {
      const double t0 = (std::conj(d1) * e).real() / (l1 * l1);
      const double t1 = (std::conj(d1) * (b - p)).real() / (l1 * l1);
      if (std::max(t0, t1) >= 0.0 && std::min(t0, t1) <= 1.0)
        fail(ErrorKind::non_transverse_intersection, "collinear overlapping segments");
    }
    return std::nullopt;
  }
  const double s = (std::conj(e) * d2).imag() / denom;
  const double t = (std::conj(e) * d1).imag() / denom;
  if (s < -kEndpointTolerance || s > 1.0 + kEndpointTolerance || t < -kEndpointTolerance || t > 1.0 + kEndpointTolerance)
    return std::nullopt;
  if (s <= kEndpointTolerance || s >= 1.0 - kEndpointTolerance || t <= kEndpointTolerance || t >= 1.0 - kEndpointTolerance)
    fail(ErrorKind::non_transverse_intersection, "intersection at a vertex");
  if (std::abs(sin_angle) < std::sin(kMinCrossingAngle))
    fail(ErrorKind::non_transverse_intersection, "crossing angle below 1e-4");
  return SegmentCrossing{p + s * d1, s, t};
}

struct LoopCrossing {
  Complex location;
  double sb = 0.0;  // loop parameter on the first loop
  double sc = 0.0;  // loop parameter on the second loop
};

/// All crossings between two loops, sorted by parameter on the first.
inline std::vector<LoopCrossing> loop_crossings(const PolyLoop& b, const PolyLoop& c) {
  std::vector<LoopCrossing> out;
  for (std::size_t i = 0; i < b.size(); ++i)
    for (std::size_t j = 0; j < c.size(); ++j)
      if (auto x = segment_crossing(b.at(i), b.at(i + 1), c.at(j), c.at(j + 1)))
        out.push_back({x->location, static_cast<double>(i) + x->s, static_cast<double>(j) + x->t});
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.sb < y.sb; });
  return out;
}

/// Self-crossings between non-adjacent segments, with s1 < s2.
inline std::vector<LoopCrossing> self_crossings(const PolyLoop& b) {
  std::vector<LoopCrossing> out;
  const std::size_t n = b.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;
      if (auto x = segment_crossing(b.at(i), b.at(i + 1), b.at(j), b.at(j + 1)))
        out.push_back({x->location, static_cast<double>(i) + x->s, static_cast<double>(j) + x->t});
    }
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.sb < y.sb; });
  return out;
}

/// Sub-path of a loop between parameters s0 < s1 (relative to the basepoint),
/// as a vertex list that includes both end points. Tags follow the segments.
inline void append_arc(const PolyLoop& loop, double s0, double s1, std::vector<Complex>& verts, std::vector<int>& tags) {
  verts.push_back(loop.point(s0));
  std::size_t k = static_cast<std::size_t>(std::floor(s0)) + 1;
  for (; static_cast<double>(k) < s1; ++k) {
    tags.push_back(loop.tag(k - 1));
    verts.push_back(loop.at(k));
  }
  tags.push_back(loop.tag(k - 1));
  verts.push_back(loop.point(s1));
}

/// Same arc traversed from s1 back to s0.
inline void append_arc_reversed(const PolyLoop& loop, double s0, double s1, std::vector<Complex>& verts,
                                std::vector<int>& tags) {
  std::vector<Complex> v;
  std::vector<int> t;
  append_arc(loop, s0, s1, v, t);
  for (std::size_t i = v.size(); i-- > 0;) verts.push_back(v[i]);
  for (std::size_t i = t.size(); i-- > 0;) tags.push_back(t[i]);
}

/// Builds a loop from a vertex chain where consecutive arcs share end points:
/// drops repeated vertices and the closing duplicate.
inline PolyLoop loop_from_chain(std::vector<Complex> verts, std::vector<int> tags) {
  // tags[i] belongs to the segment verts[i] -> verts[i+1].
  PolyLoop out;
  for (std::size_t i = 0; i + 1 < verts.size(); ++i) {
    if (verts[i] == verts[i + 1]) continue;
    out.vertices.push_back(verts[i]);
    out.arc_tags.push_back(i < tags.size() ? tags[i] : -1);
  }
  return out;
}

/// Moves every vertex by at most eps (the basepoint only along the real axis).
inline PolyLoop perturbed(const PolyLoop& loop, double eps, DeterministicRng& rng) {
  PolyLoop out = loop;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (i == out.basepoint_index) {
      out.vertices[i] += Complex(rng.uniform(-eps, eps), 0.0);
      continue;
    }
    const double r = eps * std::sqrt(rng.uniform()), a = kTwoPi * rng.uniform();
    out.vertices[i] += std::polar(r, a);
  }
  out.metric_length.reset();
  return out;
}

}  // namespace systole
