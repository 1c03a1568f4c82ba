#pragma once

// Upper bounds on f^2 g0 distances by shortest paths on a geodesic grid.

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <queue>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "systole/conformal_metric.hpp"

namespace systole {

namespace detail {

// Icosahedron with vertices (0, +-1, +-phi) and cyclic permutations. The
// vertex set, and hence every subdivision, is symmetric under each
// coordinate reflection.
inline std::array<Vec3, 12> icosahedron_vertices() {
  const double h = (1.0 + std::sqrt(5.0)) / 2.0;
  return {{{0, 1, h}, {0, -1, h}, {0, 1, -h}, {0, -1, -h}, {1, h, 0}, {-1, h, 0},
           {1, -h, 0}, {-1, -h, 0}, {h, 0, 1}, {h, 0, -1}, {-h, 0, 1}, {-h, 0, -1}}};
}

inline std::vector<std::array<int, 3>> icosahedron_faces(const std::array<Vec3, 12>& v) {
  // Faces are the vertex triples with all pairwise distances equal to the edge length 2.
  std::vector<std::array<int, 3>> faces;
  const auto adjacent = [&](int i, int j) { return std::abs(norm(v[i] - v[j]) - 2.0) < 1e-9; };
  for (int i = 0; i < 12; ++i)
    for (int j = i + 1; j < 12; ++j)
      for (int k = j + 1; k < 12; ++k)
        if (adjacent(i, j) && adjacent(j, k) && adjacent(i, k)) faces.push_back({i, j, k});
  return faces;
}

}  // namespace detail

/// Graph over a frequency-n geodesic icosphere, n the largest power of two not
/// above the resolution. Edges join lattice neighbours and second neighbours;
/// all edges of coarser power-of-two levels are kept, so estimates never
/// increase with resolution. Edge weights are fixed-rule quadratures of f
/// along the round geodesic.
class DistanceEstimator {
 public:
  DistanceEstimator(const ConformalFactor& f, int resolution) : f_(f) {
    if (resolution < 1) fail(ErrorKind::invalid_argument, "resolution must be >= 1");
    n_ = 1;
    while (2 * n_ <= resolution) n_ *= 2;
    build_nodes();
    build_edges();
  }

  int frequency() const { return n_; }
  std::size_t node_count() const { return nodes_.size(); }

  double distance(const ChartPoint& p, const ChartPoint& q) const {
    const Vec3 vp = unproject(p).v();
    const Vec3 vq = unproject(q).v();
    if (norm(vp - vq) < 1e-15) return 0.0;
    const int N = static_cast<int>(nodes_.size());
    const int sp = N, sq = N + 1;
    std::vector<std::vector<std::pair<int, double>>> extra(N + 2);
    const auto attach = [&](const Vec3& v, int id) {
      for (const auto& level : level_nodes_) {
        for (int nb : nearest(level, v, 6)) {
          const double w = segment_weight(v, nodes_[nb]);
          extra[id].push_back({nb, w});
          extra[nb].push_back({id, w});
        }
      }
    };
    attach(vp, sp);
    attach(vq, sq);
    if (angle_between(vp, vq) < kPi - 1e-6) {
      const double w = segment_weight(vp, vq);
      extra[sp].push_back({sq, w});
    }

    std::vector<double> dist(N + 2, std::numeric_limits<double>::infinity());
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    dist[sp] = 0.0;
    heap.push({0.0, sp});
    while (!heap.empty()) {
      const auto [d, u] = heap.top();
      heap.pop();
      if (d > dist[u]) continue;
      if (u == sq) return d;
      const auto relax = [&](int v, double w) {
        if (d + w < dist[v]) {
          dist[v] = d + w;
          heap.push({dist[v], v});
        }
      };
      if (u < N)
        for (const auto& [v, w] : adj_[u]) relax(v, w);
      for (const auto& [v, w] : extra[u]) relax(v, w);
    }
    return dist[sq];
  }

 private:
  void build_nodes() {
    const auto iv = detail::icosahedron_vertices();
    faces_ = detail::icosahedron_faces(iv);
    for (const auto& v : iv) nodes_.push_back(normalized(v));
    // Nodes interior to icosahedron edges, computed from the lower-index endpoint.
    for (const auto& fc : faces_) {
      for (int e = 0; e < 3; ++e) {
        int a = fc[e], b = fc[(e + 1) % 3];
        if (a > b) std::swap(a, b);
        const std::uint64_t key = static_cast<std::uint64_t>(a) * 16 + b;
        if (edge_start_.count(key)) continue;
        edge_start_[key] = static_cast<int>(nodes_.size());
        for (int k = 1; k < n_; ++k) {
          const double t = static_cast<double>(k) / n_;
          nodes_.push_back(normalized(iv[a] + (iv[b] - iv[a]) * t));
        }
      }
    }
    face_interior_.resize(faces_.size());
    for (std::size_t fi = 0; fi < faces_.size(); ++fi) {
      const auto& fc = faces_[fi];
      face_interior_[fi] = static_cast<int>(nodes_.size());
      for (int i = 1; i < n_; ++i)
        for (int j = 1; i + j < n_; ++j) {
          const double s = static_cast<double>(i) / n_, t = static_cast<double>(j) / n_;
          nodes_.push_back(normalized(iv[fc[0]] + (iv[fc[1]] - iv[fc[0]]) * s + (iv[fc[2]] - iv[fc[0]]) * t));
        }
    }
    usable_.assign(nodes_.size(), true);
    for (const auto& s : f_.singularities()) {
      const Vec3 sp = s.point();
      for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (angle_between(nodes_[i], sp) < 1e-9) usable_[i] = false;
    }
  }

  int edge_node(int a, int b, int k) const {
    // k-th lattice point along a -> b, 0 < k < n.
    if (a < b) return edge_start_.at(static_cast<std::uint64_t>(a) * 16 + b) + k - 1;
    return edge_start_.at(static_cast<std::uint64_t>(b) * 16 + a) + (n_ - k) - 1;
  }

  int lattice_node(std::size_t fi, int i, int j) const {
    const auto& fc = faces_[fi];
    if (i == 0 && j == 0) return fc[0];
    if (i == n_) return fc[1];
    if (j == n_) return fc[2];
    if (j == 0) return edge_node(fc[0], fc[1], i);
    if (i == 0) return edge_node(fc[0], fc[2], j);
    if (i + j == n_) return edge_node(fc[1], fc[2], j);
    // Interior index in the (i, j) enumeration order of build_nodes.
    int idx = 0;
    for (int ii = 1; ii < i; ++ii) idx += n_ - 1 - ii;
    return face_interior_[fi] + idx + (j - 1);
  }

  void build_edges() {
    std::unordered_set<std::uint64_t> edge_set;
    const auto key = [](int a, int b) {
      if (a > b) std::swap(a, b);
      return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
    };
    for (int step = n_; step >= 1; step /= 2) {
      // Level with lattice spacing `step` (frequency n / step).
      std::vector<std::vector<int>> ring(nodes_.size());
      std::vector<int> level;
      std::vector<char> in_level(nodes_.size(), 0);
      for (std::size_t fi = 0; fi < faces_.size(); ++fi) {
        for (int i = 0; i <= n_; i += step)
          for (int j = 0; i + j <= n_; j += step) {
            const int u = lattice_node(fi, i, j);
            if (!in_level[u]) {
              in_level[u] = 1;
              level.push_back(u);
            }
            const auto link = [&](int v) {
              ring[u].push_back(v);
              ring[v].push_back(u);
            };
            if (i + j + step <= n_) {
              link(lattice_node(fi, i + step, j));
              link(lattice_node(fi, i, j + step));
            }
            if (i >= step && i + j <= n_ && j + step <= n_ && i - step + j + step <= n_)
              link(lattice_node(fi, i - step, j + step));
          }
      }
      for (int u : level) {
        auto& r = ring[u];
        std::sort(r.begin(), r.end());
        r.erase(std::unique(r.begin(), r.end()), r.end());
      }
      for (int u : level) {
        for (int v : ring[u]) {
          edge_set.insert(key(u, v));
          for (int w : ring[v])
            if (w != u) edge_set.insert(key(u, w));
        }
      }
      std::sort(level.begin(), level.end());
      level_nodes_.push_back(std::move(level));
    }
    std::vector<std::uint64_t> edges(edge_set.begin(), edge_set.end());
    std::sort(edges.begin(), edges.end());
    std::vector<double> weights(edges.size());
    parallel_for(edges.size(), [&](std::size_t e) {
      const int a = static_cast<int>(edges[e] >> 32), b = static_cast<int>(edges[e] & 0xffffffffu);
      weights[e] = (usable_[a] && usable_[b]) ? segment_weight(nodes_[a], nodes_[b])
                                              : std::numeric_limits<double>::infinity();
    });
    adj_.assign(nodes_.size(), {});
    for (std::size_t e = 0; e < edges.size(); ++e) {
      if (!std::isfinite(weights[e])) continue;
      const int a = static_cast<int>(edges[e] >> 32), b = static_cast<int>(edges[e] & 0xffffffffu);
      adj_[a].push_back({b, weights[e]});
      adj_[b].push_back({a, weights[e]});
    }
  }

  std::vector<int> nearest(const std::vector<int>& level, const Vec3& v, std::size_t k) const {
    std::vector<std::pair<double, int>> cand;
    for (int u : level)
      if (usable_[u]) cand.push_back({norm(nodes_[u] - v), u});
    k = std::min(k, cand.size());
    std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
    std::vector<int> out;
    for (std::size_t i = 0; i < k; ++i) out.push_back(cand[i].second);
    return out;
  }

  double segment_weight(const Vec3& a, const Vec3& b) const {
    const double theta = angle_between(a, b);
    if (auto c = f_.constant_value()) return *c * theta;
    const SegmentPath seg(project(SpherePoint(a)), project(SpherePoint(b)), SegmentKind::round_geodesic);
    for (const auto& s : f_.singularities()) {
      const Vec3 sp = s.point();
      if (angle_between(seg.point(seg.closest_parameter(sp)), sp) < 2.0 * theta + 1e-3)
        return detail::integrate_segment(seg, f_.singularities(), [&](const ChartPoint& z) { return f_(z); }, 1e-8)
            .value;
    }
    return gauss_legendre8([&](double t) { return f_.at(seg.point(t)) * theta; }, 0.0, 1.0);
  }

  ConformalFactor f_;
  int n_ = 1;
  std::vector<Vec3> nodes_;
  std::vector<char> usable_;
  std::vector<std::array<int, 3>> faces_;
  std::unordered_map<std::uint64_t, int> edge_start_;
  std::vector<int> face_interior_;
  std::vector<std::vector<int>> level_nodes_;
  std::vector<std::vector<std::pair<int, double>>> adj_;
};

inline double estimate_distance(const ConformalFactor& f, const ChartPoint& p, const ChartPoint& q, int resolution) {
  return DistanceEstimator(f, resolution).distance(p, q);
}

}  // namespace systole
