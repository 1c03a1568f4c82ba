#pragma once

// Crossroads/bridges classification, arc exchange, subloop excision and the
// induction producing a loop with an odd number of odd windings.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "systole/hyperelliptic.hpp"
#include "systole/polyloop.hpp"
#include "systole/random.hpp"

namespace systole {

enum class CrossingKind { crossroad, bridge };

inline const char* kind_label(CrossingKind k) { return k == CrossingKind::crossroad ? "crossroad" : "bridge"; }

struct IntersectionRecord {
  Complex location;
  double sb = 0.0;
  double sc = 0.0;
  CrossingKind kind = CrossingKind::bridge;
  /// Branch of each loop's chosen lift at the location.
  Complex lift_b, lift_c;
};

/// Lifts are continued from the principal branch at each basepoint.
inline std::vector<IntersectionRecord> classify_intersections(const PolyLoop& b, const PolyLoop& c,
                                                              const RamifiedCover& cover) {
  std::vector<IntersectionRecord> out;
  const auto crossings = loop_crossings(b, c);
  if (crossings.empty()) return out;
  const auto wb = continue_along(cover, b, cover.principal_branch(b.basepoint()));
  const auto wc = continue_along(cover, c, cover.principal_branch(c.basepoint()));
  for (const auto& x : crossings) {
    IntersectionRecord r;
    r.location = x.location;
    r.sb = x.sb;
    r.sc = x.sc;
    r.lift_b = lift_at(cover, b, wb, x.sb);
    r.lift_c = lift_at(cover, c, wc, x.sc);
    r.kind = std::abs(r.lift_b - r.lift_c) < std::abs(r.lift_b + r.lift_c) ? CrossingKind::crossroad
                                                                            : CrossingKind::bridge;
    out.push_back(r);
  }
  return out;
}

namespace detail {

/// Vertex chain with per-segment tags; arcs are appended end to end.
struct Chain {
  std::vector<Complex> verts;
  std::vector<int> tags;

  void start(Complex p) { verts = {p}; }

  /// Appends loop[s0 -> s1] (s0 < s1) ending exactly at `end`.
  void forward(const PolyLoop& loop, double s0, double s1, Complex end) {
    std::size_t k = static_cast<std::size_t>(std::floor(s0)) + 1;
    for (; static_cast<double>(k) < s1; ++k) {
      push(loop.tag(k - 1), loop.at(k));
    }
    push(loop.tag(k - 1), end);
  }

  /// Appends loop[s1 -> s0] traversed backwards, ending exactly at `end`.
  void backward(const PolyLoop& loop, double s0, double s1, Complex end) {
    std::vector<std::size_t> interior;
    for (std::size_t k = static_cast<std::size_t>(std::floor(s0)) + 1; static_cast<double>(k) < s1; ++k)
      interior.push_back(k);
    const std::size_t last_seg = interior.empty() ? static_cast<std::size_t>(std::floor(s0)) : interior.back();
    std::size_t seg = last_seg;
    for (std::size_t i = interior.size(); i-- > 0;) {
      push(loop.tag(seg), loop.at(interior[i]));
      seg = interior[i] - 1;
    }
    push(loop.tag(seg), end);
  }

  void push(int tag, Complex v) {
    if (v == verts.back()) return;
    tags.push_back(tag);
    verts.push_back(v);
  }

  /// Closed loop based at verts[0]; the final vertex must equal the start.
  PolyLoop close() const {
    PolyLoop out;
    out.vertices.assign(verts.begin(), verts.end() - 1);
    out.arc_tags = tags;
    return out;
  }
};

inline double arc_length(const ConformalFactor& f, const PolyLoop& loop, const LoopMetric& m, double s0, double s1) {
  const std::size_t k0 = static_cast<std::size_t>(std::floor(s0));
  const std::size_t k1 = static_cast<std::size_t>(std::floor(s1));
  if (k0 == k1) return segment_length(f, loop.point(s0), loop.point(s1));
  double total = segment_length(f, loop.point(s0), loop.at(k0 + 1));
  total += m.prefix[k1] - m.prefix[k0 + 1];
  if (s1 > static_cast<double>(k1)) total += segment_length(f, loop.at(k1), loop.point(s1));
  return total;
}

}  // namespace detail

/// Swaps the arcs of b and c between p and q not containing the basepoints.
/// The first loop is based at b's basepoint, the second at c's.
inline std::pair<PolyLoop, PolyLoop> exchange_arcs(const PolyLoop& b_in, const PolyLoop& c_in,
                                                   const IntersectionRecord& p, const IntersectionRecord& q) {
  if (std::abs(p.location - q.location) < 1e-12 || p.sb == q.sb || p.sc == q.sc)
    fail(ErrorKind::same_point, "exchange needs two distinct intersections");
  const PolyLoop b = rebased(b_in), c = rebased(c_in);
  const IntersectionRecord& pb1 = p.sb < q.sb ? p : q;  // first along b
  const IntersectionRecord& pb2 = p.sb < q.sb ? q : p;
  const IntersectionRecord& pc1 = p.sc < q.sc ? p : q;  // first along c
  const IntersectionRecord& pc2 = p.sc < q.sc ? q : p;
  const bool same_order = &pb1 == &pc1;

  detail::Chain nb;
  nb.start(b.at(0));
  nb.forward(b, 0.0, pb1.sb, pb1.location);
  if (same_order)
    nb.forward(c, pc1.sc, pc2.sc, pb2.location);
  else
    nb.backward(c, pc1.sc, pc2.sc, pb2.location);
  nb.forward(b, pb2.sb, static_cast<double>(b.size()), b.at(0));

  detail::Chain nc;
  nc.start(c.at(0));
  nc.forward(c, 0.0, pc1.sc, pc1.location);
  if (same_order)
    nc.forward(b, pb1.sb, pb2.sb, pc2.location);
  else
    nc.backward(b, pb1.sb, pb2.sb, pc2.location);
  nc.forward(c, pc2.sc, static_cast<double>(c.size()), c.at(0));
  return {nb.close(), nc.close()};
}

/// Loop with the subloop between a self-crossing's parameters cut out.
inline PolyLoop excise(const PolyLoop& loop_in, const LoopCrossing& x) {
  const PolyLoop loop = rebased(loop_in);
  detail::Chain ch;
  ch.start(loop.at(0));
  ch.forward(loop, 0.0, x.sb, x.location);
  ch.forward(loop, x.sc, static_cast<double>(loop.size()), loop.at(0));
  return ch.close();
}

/// The closed subloop between a self-crossing's parameters.
inline PolyLoop subloop(const PolyLoop& loop_in, const LoopCrossing& x) {
  const PolyLoop loop = rebased(loop_in);
  detail::Chain ch;
  ch.start(x.location);
  ch.forward(loop, x.sb, x.sc, x.location);
  return ch.close();
}

/// Repeatedly cuts out basepoint-free subloops whose lift does not close,
/// largest first, until every remaining one closes.
inline PolyLoop remove_bad_subloop(const PolyLoop& loop_in, const RamifiedCover& cover) {
  PolyLoop loop = rebased(loop_in);
  for (;;) {
    const auto crossings = self_crossings(loop);
    const LoopCrossing* worst = nullptr;
    double worst_span = -1.0;
    for (const auto& x : crossings) {
      if (lift_closes(cover, subloop(loop, x))) continue;
      if (x.sc - x.sb > worst_span) {
        worst_span = x.sc - x.sb;
        worst = &x;
      }
    }
    if (!worst) return loop;
    loop = excise(loop, *worst);
  }
}

/// First bad subloop excised once, if any (used when a single cut suffices).
inline std::optional<PolyLoop> excise_one_bad_subloop(const PolyLoop& loop_in, const RamifiedCover& cover,
                                                      const ConformalFactor& f) {
  const PolyLoop loop = rebased(loop_in);
  std::optional<PolyLoop> best;
  double best_len = std::numeric_limits<double>::infinity();
  for (const auto& x : self_crossings(loop)) {
    if (lift_closes(cover, subloop(loop, x))) continue;
    PolyLoop cut = excise(loop, x);
    const double len = loop_length(f, cut);
    if (len < best_len) {
      best_len = len;
      cut.metric_length = len;
      best = std::move(cut);
    }
  }
  return best;
}

struct ExchangeAudit {
  double input_total = 0.0;
  double output_total = 0.0;
};

struct SurgeryResult {
  PolyLoop loop;
  /// Which branch produced the loop: "b", "c", "b-subloop", "c-subloop", "exchange".
  std::string branch;
  std::optional<ExchangeAudit> audit;
};

/// Surgery: given loops of length <= L with |W_S(c) \ W_S(b)| odd,
/// returns a loop of length <= L with |W_S| odd, based at b's or c's basepoint.
inline SurgeryResult surgery(const PolyLoop& b_in, const PolyLoop& c_in, const PointSet& S, double L,
                             const RamifiedCover& cover, const ConformalFactor& f) {
  const PolyLoop b = with_length(rebased(b_in), f), c = with_length(rebased(c_in), f);
  if (!lift_closes(cover, b)) return {b, "b", std::nullopt};
  if (!lift_closes(cover, c)) return {c, "c", std::nullopt};
  if (auto cut = excise_one_bad_subloop(b, cover, f)) return {*cut, "b-subloop", std::nullopt};
  if (auto cut = excise_one_bad_subloop(c, cover, f)) return {*cut, "c-subloop", std::nullopt};

  const auto records = classify_intersections(b, c, cover);
  const LoopMetric mb = loop_metric(f, b), mc = loop_metric(f, c);
  struct Candidate {
    std::size_t i, j;
    double longer;
  };
  std::vector<Candidate> cands;
  for (std::size_t i = 0; i < records.size(); ++i)
    for (std::size_t j = i + 1; j < records.size(); ++j) {
      if (records[i].kind == records[j].kind) continue;
      const double s1b = std::min(records[i].sb, records[j].sb), s2b = std::max(records[i].sb, records[j].sb);
      const double s1c = std::min(records[i].sc, records[j].sc), s2c = std::max(records[i].sc, records[j].sc);
      const double ab = detail::arc_length(f, b, mb, s1b, s2b);
      const double ac = detail::arc_length(f, c, mc, s1c, s2c);
      const double lb = mb.total() - ab + ac, lc = mc.total() - ac + ab;
      cands.push_back({i, j, std::max(lb, lc)});
    }
  std::sort(cands.begin(), cands.end(), [](const auto& x, const auto& y) { return x.longer < y.longer; });
  for (const auto& cand : cands) {
    auto [nb, nc] = exchange_arcs(b, c, records[cand.i], records[cand.j]);
    nb.metric_length = loop_length(f, nb);
    nc.metric_length = loop_length(f, nc);
    ExchangeAudit audit{*b.metric_length + *c.metric_length, *nb.metric_length + *nc.metric_length};
    const PolyLoop* pick = nullptr;
    for (const PolyLoop* h : {&nb, &nc}) {
      if (*h->metric_length > L + 1e-9 || !winding_profile(*h, S).odd()) continue;
      if (!pick || *h->metric_length < *pick->metric_length) pick = h;
    }
    if (pick) return {*pick, "exchange", audit};
  }
  fail(ErrorKind::no_mixed_pair, "no crossroad/bridge pair yields an odd loop within the bound (" +
                                     std::to_string(records.size()) + " intersections)");
}

struct OddLoopResult {
  PolyLoop loop;
  int surgeries = 0;
  std::vector<ExchangeAudit> audits;
  std::vector<std::string> trace;
};

namespace detail {

inline PolyLoop odd_loop_step(const std::vector<PolyLoop>& loops, std::size_t k, const PointSet& S, double L,
                              const ConformalFactor& f, OddLoopResult& acc) {
  if (k >= loops.size()) fail(ErrorKind::coverage_violated, "points of S left without a covering loop");
  const PolyLoop& b = loops[k];
  const WindingProfile wb = winding_profile(b, S);
  if (wb.odd()) {
    acc.trace.push_back("loop " + std::to_string(k) + " odd for |S|=" + std::to_string(S.size()));
    return b;
  }
  PointSet S0;
  for (const auto& s : S)
    if (!wb.odd_set.count(s.id)) S0.push_back(s);
  const PolyLoop c = odd_loop_step(loops, k + 1, S0, L, f, acc);
  if (winding_profile(c, S).odd()) return c;
  SurgeryResult r = surgery(b, c, S, L, RamifiedCover::over(S), f);
  ++acc.surgeries;
  if (r.audit) acc.audits.push_back(*r.audit);
  acc.trace.push_back("surgery on loop " + std::to_string(k) + " (" + r.branch + ") for |S|=" + std::to_string(S.size()));
  return r.loop;
}

}  // namespace detail

/// Induction over |S| = 2n+1: returns a loop of length <= L with |W_S| odd.
/// Coverage means every point of S has odd winding in at least one loop.
inline OddLoopResult find_odd_loop(const std::vector<PolyLoop>& loops_in, const PointSet& S, double L,
                                   const ConformalFactor& f) {
  if (S.size() % 2 == 0) fail(ErrorKind::even_set, "|S| = " + std::to_string(S.size()) + " is even");
  std::vector<PolyLoop> loops;
  for (const auto& l : loops_in) {
    PolyLoop r = rebased(l);
    if (!r.metric_length) r.metric_length = loop_length(f, r);
    if (*r.metric_length > L + 1e-9) fail(ErrorKind::invalid_argument, "input loop longer than the bound");
    loops.push_back(std::move(r));
  }
  for (const auto& s : S) {
    bool covered = false;
    for (const auto& l : loops) covered = covered || winding_number(l, s.z) % 2 != 0;
    if (!covered) fail(ErrorKind::coverage_violated, "point " + std::to_string(s.id) + " is inside no loop");
  }
  OddLoopResult out;
  out.loop = detail::odd_loop_step(loops, 0, S, L, f, out);
  if (!out.loop.metric_length) out.loop.metric_length = loop_length(f, out.loop);
  if (!winding_profile(out.loop, S).odd()) fail(ErrorKind::certificate_invalid, "induction returned an even loop");
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic instances.

/// Counterclockwise loop tangent to the real axis at a: radius
/// R (1 + alpha sin(k phi + phase) (1 + sin phi) / 2) about a + iR, with the
/// basepoint (phi = -pi/2) exactly at a.
inline PolyLoop tangent_wobble_loop(double a, double R, double alpha, int k, double phase, int n = 96) {
  std::vector<Complex> v;
  for (int j = 0; j < n; ++j) {
    if (j == 0) {
      v.emplace_back(a, 0.0);
      continue;
    }
    const double phi = -0.5 * kPi + kTwoPi * j / n;
    const double rho = R * (1.0 + alpha * std::sin(k * phi + phase) * (1.0 + std::sin(phi)) / 2.0);
    v.push_back(Complex(a, R) + std::polar(rho, phi));
  }
  return make_loop(std::move(v));
}

struct SurgeryInstance {
  std::vector<PolyLoop> loops;
  PointSet S;
  double L = 0.0;
};

inline void finish_instance(SurgeryInstance& inst, const ConformalFactor& f) {
  inst.L = 0.0;
  for (auto& l : inst.loops) {
    l.metric_length = loop_length(f, l);
    inst.L = std::max(inst.L, *l.metric_length);
  }
}

/// |S| = 3: b encloses points 0 and 1, c encloses points 1 and 2.
inline SurgeryInstance canonical_instance(const ConformalFactor& f = ConformalFactor::constant(1.0)) {
  SurgeryInstance inst;
  inst.S = {{0, {-0.6, 1.2}}, {1, {0.6, 1.2}}, {2, {1.7, 1.3}}};
  inst.loops = {tangent_wobble_loop(0.0, 1.4, 0.0, 3, 0.0), tangent_wobble_loop(1.2, 1.0, 0.0, 3, 0.0)};
  finish_instance(inst, f);
  return inst;
}

/// Random points in the upper half-plane and wobbly tangent loops added until
/// every point has odd winding in some loop.
inline SurgeryInstance random_instance(int size_S, std::uint64_t seed,
                                       const ConformalFactor& f = ConformalFactor::constant(1.0)) {
  DeterministicRng rng(seed);
  SurgeryInstance inst;
  for (int i = 0; i < size_S; ++i) inst.S.push_back({i, {rng.uniform(-4.0, 4.0), rng.uniform(0.3, 2.5)}});
  const auto clear = [&](const PolyLoop& l) {
    for (const auto& s : inst.S)
      if (distance_to_loop(l, s.z) < 1e-3) return false;
    for (const auto& o : inst.loops)
      if (std::abs(o.basepoint() - l.basepoint()) < 1e-3) return false;
    return true;
  };
  for (int guard = 0; guard < 10000; ++guard) {
    std::vector<int> uncovered;
    for (const auto& s : inst.S) {
      bool cov = false;
      for (const auto& l : inst.loops) cov = cov || winding_number(l, s.z) % 2 != 0;
      if (!cov) uncovered.push_back(s.id);
    }
    if (uncovered.empty()) break;
    const Complex s = inst.S[uncovered[rng.next_u64() % uncovered.size()]].z;
    // Half of the loops are aimed at a pair of points, which favors even windings.
    const Complex t = rng.uniform() < 0.5 ? inst.S[rng.next_u64() % inst.S.size()].z : s;
    const double a = 0.5 * (s.real() + t.real()) + rng.uniform(-0.5, 0.5);
    const auto need = [&](Complex z) { return (std::norm(Complex(z.real() - a, 0.0)) + z.imag() * z.imag()) / (2.0 * z.imag()); };
    const double R = std::max(need(s), need(t)) * rng.uniform(1.05, 1.3);
    const double alpha = rng.uniform(0.0, 0.15);
    const int k = 2 + static_cast<int>(rng.next_u64() % 4);
    PolyLoop l = tangent_wobble_loop(a, R, alpha, k, rng.uniform(0.0, kTwoPi));
    if (clear(l) && winding_number(l, s) % 2 != 0) inst.loops.push_back(std::move(l));
  }
  // Shuffle so the covering order is not the generation order.
  for (std::size_t i = inst.loops.size(); i > 1; --i) std::swap(inst.loops[i - 1], inst.loops[rng.next_u64() % i]);
  finish_instance(inst, f);
  return inst;
}

/// Points in a row with loops around consecutive runs {0,1}, {1,2,3}, {3,4,5},
/// ..., {2n-1,2n}: every induction level needs a surgery.
inline SurgeryInstance chain_instance(int size_S, std::uint64_t seed,
                                      const ConformalFactor& f = ConformalFactor::constant(1.0)) {
  if (size_S % 2 == 0) fail(ErrorKind::even_set, "chain instance needs odd |S|");
  DeterministicRng rng(seed);
  SurgeryInstance inst;
  for (int i = 0; i < size_S; ++i) inst.S.push_back({i, {i + rng.uniform(-0.1, 0.1), 1.0 + rng.uniform(-0.1, 0.1)}});
  const auto around = [&](int lo, int hi) {
    std::set<int> want;
    for (int i = lo; i <= hi; ++i) want.insert(i);
    const double a = 0.5 * (inst.S[lo].z.real() + inst.S[hi].z.real()) + rng.uniform(-0.05, 0.05);
    double need = 0.0;
    for (int i = lo; i <= hi; ++i) {
      const Complex z = inst.S[i].z;
      need = std::max(need, (std::norm(Complex(z.real() - a, 0.0)) + z.imag() * z.imag()) / (2.0 * z.imag()));
    }
    for (int attempt = 0; attempt < 1000; ++attempt) {
      PolyLoop l = tangent_wobble_loop(a, need * rng.uniform(1.02, 1.25), rng.uniform(0.0, 0.05),
                                       2 + static_cast<int>(rng.next_u64() % 4), rng.uniform(0.0, kTwoPi));
      bool clear = true;
      for (const auto& s : inst.S) clear = clear && distance_to_loop(l, s.z) >= 1e-3;
      if (clear && winding_profile(l, inst.S).odd_set == want) return l;
    }
    fail(ErrorKind::invalid_argument, "could not build a chain loop");
  };
  const int n = size_S / 2;
  if (n == 0) {
    inst.loops.push_back(around(0, 0));
  } else {
    inst.loops.push_back(around(0, 1));
    for (int k = 1; k < n; ++k) inst.loops.push_back(around(2 * k - 1, 2 * k + 1));
    inst.loops.push_back(around(2 * n - 1, 2 * n));
  }
  finish_instance(inst, f);
  return inst;
}

}  // namespace systole
