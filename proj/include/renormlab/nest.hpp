#pragma once

// Principal nest around the critical point, cascade structure of its central
// returns, Yoccoz-style annulus profiles, successor intervals, and the
// enhanced nest assembled from them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "renormlab/box_map.hpp"

namespace renormlab {

// ---------------------------------------------------------------------------
// Iterate helpers

template <class S>
S iterate_value(const ExtendedMap<S>& F, S x, int fiber, std::int64_t steps) {
  return F.iterate(FiberPoint<S>{x, fiber}, steps).x;
}

template <class S>
Jet<S> iterate_jet(const ExtendedMap<S>& F, S x, int fiber,
                   std::int64_t steps) {
  using std::abs;
  Jet<S> j = jet_var(x);
  int ph = fiber;
  for (std::int64_t s = 0; s < steps; ++s) {
    j = eval_jet(F.map.factors[static_cast<std::size_t>(ph)], j);
    ph = (ph + 1) % F.n();
    if (abs(j.v) > S(1) + S(1e-6)) throw domain_error("orbit escaped [-1,1]");
  }
  return j;
}

// ---------------------------------------------------------------------------
// Parameters

template <class S>
struct NestParams {
  std::int64_t horizon = 200000;  // cap on entry-time searches, in map steps
  S superstable_tol{};            // |return point| below this ends the nest
  S degenerate_tol{};             // landing == level, relative to level length

  static NestParams defaults() {
    using std::sqrt;
    NestParams p;
    const S t = sqrt(machine_eps<S>()) / S(10);
    p.superstable_tol = t;
    p.degenerate_tol = t;
    return p;
  }
};

namespace detail {

// Orientation-reversing fixed point of the r-step return on I, closest to the
// center. Exists exactly when the return is a unimodal restriction with a
// dividing fixed point; absent for superstable-centered returns.
template <class S>
std::optional<FiberInterval<S>> rescale_level(const ExtendedMap<S>& F,
                                              const FiberInterval<S>& I,
                                              std::int64_t r, int cells = 4096) {
  using std::abs;
  const S shrink = I.length() * S(1e-4);
  auto h = [&](S x) {
    return F.iterate(FiberPoint<S>{x, I.fiber}, r).x - x;
  };
  const std::vector<S> roots =
      isolate_roots<S>(h, I.lo + shrink, I.hi - shrink, cells);
  const S inner = I.length() * S(1e-5);
  std::optional<S> best;
  for (const S& z : roots) {
    if (abs(z) <= inner) continue;
    const Jet<S> j = iterate_jet(F, z, I.fiber, r);
    if (!(j.d1 < S(0))) continue;
    if (!best || abs(z) < abs(*best)) best = z;
  }
  if (!best) return std::nullopt;
  const S a = abs(*best);
  return FiberInterval<S>{-a, a, I.fiber};
}

template <class S>
bool same_interval(const FiberInterval<S>& A, const FiberInterval<S>& B,
                   S rel_tol) {
  using std::abs;
  const S t = rel_tol * B.length();
  return A.fiber == B.fiber && abs(A.lo - B.lo) <= t && abs(A.hi - B.hi) <= t;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Principal nest

template <class S>
struct PrincipalNest {
  std::vector<FiberInterval<S>> levels;    // I_0, I_1, ... around the center
  std::vector<std::int64_t> return_times;  // first return of the critical
                                           // orbit to levels[k]
  std::vector<char> by_rescale;            // levels[k] built from a reversing
                                           // fixed point of the return map
  std::vector<S> scaling_factors;          // |I_k| / |I_{k+1}|
  std::string status;                      // "max-depth" | "superstable"
};

// Descends from I_0 = (-|alpha|, |alpha|). Each step takes the landing
// component of the critical point in the current level; when the landing
// ties with the level itself (the return fixes the boundary, so the level
// carries a period-preserving sub-map) the step rescales through the
// orientation-reversing fixed point of the return instead. A return orbit
// hitting the critical point stops the nest as superstable.
template <class S>
PrincipalNest<S> principal_nest(
    const ExtendedMap<S>& F, int depth,
    const NestParams<S>& par = NestParams<S>::defaults()) {
  using std::abs;
  PrincipalNest<S> nest;
  const S a = abs(F.alpha);
  nest.levels.push_back(FiberInterval<S>{-a, a, 0});
  nest.by_rescale.push_back(0);
  const FiberPoint<S> c0{S(0), 0};

  while (static_cast<int>(nest.levels.size()) < depth + 1) {
    const FiberInterval<S> I = nest.levels.back();
    const IntervalSet<S> box{I};
    const auto entry = first_entry(F, c0, box, par.horizon);
    if (!entry)
      throw domain_error("nest: critical orbit does not enter level");
    const std::int64_t r = entry->time;
    nest.return_times.push_back(r);

    const FiberPoint<S> ret = F.iterate(c0, r);
    if (abs(ret.x) <= par.superstable_tol) {
      nest.status = "superstable";
      return nest;
    }

    const auto land = landing_component(F, c0, box, par.horizon);
    FiberInterval<S> next = land.component;
    if (detail::same_interval(next, I, par.degenerate_tol)) {
      const auto resc = detail::rescale_level(F, I, r);
      if (!resc)
        throw domain_error("nest: degenerate return has no reversing fixed point");
      next = *resc;
      nest.by_rescale.push_back(1);
    } else {
      nest.by_rescale.push_back(0);
    }
    if (!(next.lo > I.lo && next.hi < I.hi && next.length() > S(0)))
      throw domain_error("nest: level failed to shrink");
    nest.scaling_factors.push_back(I.length() / next.length());
    nest.levels.push_back(next);
  }

  nest.status = "max-depth";
  // Return time of the deepest level, when visible within the horizon.
  const auto last = first_entry(F, c0, IntervalSet<S>{nest.levels.back()},
                                par.horizon);
  if (last) nest.return_times.push_back(last->time);
  return nest;
}

// ---------------------------------------------------------------------------
// Cascades of central returns

struct CascadeSegment {
  int start = 0;  // level index of the cascade top
  int end = 0;    // level index of the cascade bottom (inclusive)
  std::string kind;  // "saddle-node-like" | "other"
};

struct CascadeDecomposition {
  std::vector<int> non_central_moments;  // ascending level indices m with a
                                         // non-central return to I_{m-1}
  std::vector<CascadeSegment> cascades;  // consecutive segments sharing ends
  int height = 0;                        // number of non-central moments
};

namespace detail {

// A cascade is saddle-node-like when the return over its top level has no
// fixed point on the next level down (grid sign scan).
template <class S>
std::string classify_cascade(const ExtendedMap<S>& F,
                             const PrincipalNest<S>& nest, int start,
                             int grid = 1024) {
  if (start + 1 >= static_cast<int>(nest.levels.size()) ||
      start >= static_cast<int>(nest.return_times.size()))
    return "other";
  const std::int64_t r = nest.return_times[static_cast<std::size_t>(start)];
  const FiberInterval<S>& B2 =
      nest.levels[static_cast<std::size_t>(start) + 1];
  S prev{};
  for (int i = 0; i <= grid; ++i) {
    const S x = B2.lo + B2.length() * S(i) / S(grid);
    S v;
    try {
      v = F.iterate(FiberPoint<S>{x, B2.fiber}, r).x - x;
    } catch (const domain_error&) {
      return "other";
    }
    if (v == S(0)) return "other";
    if (i > 0 && ((prev < S(0)) != (v < S(0)))) return "other";
    prev = v;
  }
  return "saddle-node-like";
}

}  // namespace detail

template <class S>
CascadeDecomposition cascade_decomposition(const ExtendedMap<S>& F,
                                           const PrincipalNest<S>& nest) {
  CascadeDecomposition dec;
  const int levels = static_cast<int>(nest.levels.size());
  const FiberPoint<S> c0{S(0), 0};
  for (int k = 0; k + 1 < levels; ++k) {
    if (k >= static_cast<int>(nest.return_times.size())) break;
    const FiberPoint<S> ret =
        F.iterate(c0, nest.return_times[static_cast<std::size_t>(k)]);
    const bool central =
        contains_interior(nest.levels[static_cast<std::size_t>(k) + 1], ret);
    if (!central) dec.non_central_moments.push_back(k + 1);
  }
  dec.height = static_cast<int>(dec.non_central_moments.size());

  int prev = 0;
  for (int m : dec.non_central_moments) {
    dec.cascades.push_back(
        CascadeSegment{prev, m, detail::classify_cascade(F, nest, prev)});
    prev = m;
  }
  if (prev < levels - 1 || dec.cascades.empty())
    dec.cascades.push_back(CascadeSegment{
        prev, levels - 1, detail::classify_cascade(F, nest, prev)});
  return dec;
}

// ---------------------------------------------------------------------------
// Yoccoz-style annulus profile of one cascade

template <class S>
struct YoccozRow {
  int j = 0;
  S ratio{};       // (|B_j| - |B_{j+1}|) / |B_1|
  S normalized{};  // ratio * min(j, L-j)^2
};

template <class S>
struct YoccozProfile {
  std::vector<YoccozRow<S>> rows;
  S eta{};
  bool within_band = true;  // all normalized values inside [1/eta, eta]
  S ratio_sum{};
};

template <class S>
YoccozProfile<S> yoccoz_profile(const std::vector<FiberInterval<S>>& levels,
                                S eta = S(20)) {
  const int L = static_cast<int>(levels.size());
  if (L < 4) throw domain_error("yoccoz: cascade shorter than four levels");
  YoccozProfile<S> prof;
  prof.eta = eta;
  const S base = levels.front().length();
  for (int j = 1; j <= L - 1; ++j) {
    const S ratio = (levels[static_cast<std::size_t>(j) - 1].length() -
                     levels[static_cast<std::size_t>(j)].length()) /
                    base;
    const S k = S(std::min(j, L - j));
    const S norm = ratio * k * k;
    prof.rows.push_back(YoccozRow<S>{j, ratio, norm});
    prof.ratio_sum += ratio;
    if (!(norm >= S(1) / eta && norm <= eta)) prof.within_band = false;
  }
  return prof;
}

// ---------------------------------------------------------------------------
// Successor intervals

template <class S>
struct SuccessorParams {
  std::int64_t kid_horizon = 4096;       // orbit length scanned for kid times
  int kid_cap = 16;                      // kids kept per critical-point pair
  std::int64_t landing_horizon = 200000; // entry searches
  S degenerate_tol{};

  static SuccessorParams defaults() {
    using std::sqrt;
    SuccessorParams p;
    p.degenerate_tol = sqrt(machine_eps<S>()) / S(10);
    return p;
  }
};

template <class S>
struct SuccessorResult {
  FiberInterval<S> interval;
  std::int64_t total_steps = 0;  // pullback depth relative to the input
  bool by_rescale = false;       // built through a reversing fixed point
  int anchor_crit = 0;           // critical fiber whose landing gave U'
  int kid_crit = 0;              // critical fiber whose orbit gave the kid
  std::int64_t kid_time = 0;
};

namespace detail {

// Pullback of `target` along a precomputed orbit, aborting as soon as an
// interior chain link captures a critical point.
template <class S>
std::optional<FiberInterval<S>> critical_free_pullback(
    const ExtendedMap<S>& F, const std::vector<FiberPoint<S>>& orbit,
    std::int64_t t, const FiberInterval<S>& target) {
  FiberInterval<S> cur = target;
  for (std::int64_t s = t - 1; s >= 0; --s) {
    const auto& p = orbit[static_cast<std::size_t>(s)];
    try {
      cur = pullback_once(F, cur, p.fiber, p.x);
    } catch (const domain_error&) {
      return std::nullopt;
    }
    if (s >= 1 && contains_interior(cur, S(0))) return std::nullopt;
  }
  return cur;
}

template <class S>
std::vector<FiberPoint<S>> bounded_orbit(const ExtendedMap<S>& F,
                                         const FiberPoint<S>& x0,
                                         std::int64_t length) {
  using std::abs;
  std::vector<FiberPoint<S>> orbit;
  orbit.reserve(static_cast<std::size_t>(length) + 1);
  orbit.push_back(x0);
  for (std::int64_t s = 0; s < length; ++s) {
    const FiberPoint<S> nxt = F.step(orbit.back());
    if (abs(nxt.x) > S(1) + S(1e-6)) break;
    orbit.push_back(nxt);
  }
  return orbit;
}

}  // namespace detail

// Smallest successor: over critical points c' take U' = the landing (or own)
// component of c' in T, enumerate critical-orbit kids of U' whose chains keep
// critical points out of the interior links, land the center-critical point in
// each kid, and keep the shortest result. A successor that ties with T itself
// (periodic boundary, the renormalization core scale) is replaced by the
// reversing-fixed-point rescale of T.
template <class S>
SuccessorResult<S> successor(
    const ExtendedMap<S>& F, const FiberInterval<S>& T,
    const SuccessorParams<S>& par = SuccessorParams<S>::defaults()) {
  const int n = F.n();
  const FiberPoint<S> c0{S(0), 0};
  std::optional<SuccessorResult<S>> best;

  std::vector<std::vector<FiberPoint<S>>> orbits;
  orbits.reserve(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j)
    orbits.push_back(
        detail::bounded_orbit(F, FiberPoint<S>{S(0), j}, par.kid_horizon));

  for (int cp = 0; cp < n; ++cp) {
    const FiberPoint<S> anchor{S(0), cp};
    if (!contains_interior(T, anchor) &&
        !first_entry(F, anchor, IntervalSet<S>{T}, par.landing_horizon))
      continue;
    const auto uprime =
        landing_or_component(F, anchor, IntervalSet<S>{T}, par.landing_horizon);
    const std::int64_t s_anchor = uprime.time;

    for (int ck = 0; ck < n; ++ck) {
      const auto& orbit = orbits[static_cast<std::size_t>(ck)];
      int found = 0;
      for (std::int64_t t = 1;
           t < static_cast<std::int64_t>(orbit.size()) && found < par.kid_cap;
           ++t) {
        if (!contains_interior(uprime.component,
                               orbit[static_cast<std::size_t>(t)]))
          continue;
        const auto kid =
            detail::critical_free_pullback(F, orbit, t, uprime.component);
        if (!kid) continue;
        ++found;
        LandingResult<S> land;
        try {
          land = landing_or_component(F, c0, IntervalSet<S>{*kid},
                                      par.landing_horizon);
        } catch (const domain_error&) {
          continue;
        }
        const S len = land.component.length();
        if (!best || len < best->interval.length()) {
          best = SuccessorResult<S>{land.component,
                                    land.time + t + s_anchor,
                                    false, cp, ck, t};
        }
      }
    }
  }

  if (!best) throw domain_error("successor: no admissible kid within horizon");

  if (detail::same_interval(best->interval, T, par.degenerate_tol)) {
    const auto entry = first_entry(F, c0, IntervalSet<S>{T}, par.landing_horizon);
    if (!entry)
      throw domain_error("successor: no entry within horizon");
    const auto resc = detail::rescale_level(F, T, entry->time);
    if (!resc)
      throw domain_error("successor: degenerate without reversing fixed point");
    best->interval = *resc;
    best->by_rescale = true;
    best->total_steps = 0;
  } else if (!subset_of(best->interval, T,
                        par.degenerate_tol * T.length())) {
    throw domain_error("successor: result not nested inside input");
  }
  return *best;
}

// ---------------------------------------------------------------------------
// Enhanced nest

template <class S>
struct EnhancedParams {
  std::int64_t horizon = 65536;   // entry searches and pull time scans
  std::int64_t omega_burn = 256;  // critical orbit tail sampled as omega(c0)
  std::int64_t omega_samples = 2048;
  SuccessorParams<S> succ = SuccessorParams<S>::defaults();

  static EnhancedParams defaults() { return EnhancedParams{}; }
};

template <class S>
struct EnhancedNestReport {
  std::vector<FiberInterval<S>> levels;     // E_0, E_1, ...
  std::vector<std::int64_t> entry_times;    // r_j: first entry of the critical
                                            // orbit into E_j
  std::vector<std::int64_t> transfer_steps; // m_j: chain depth E_{j+1} -> E_j
  std::vector<char> transfer_valid;         // pullback-derived and boundary-
                                            // verified transfer step counts
  std::optional<int> chi;                   // first j with r_j == target
  std::int64_t target_return_time = 0;
  std::string status;                       // "chi-reached" | "depth-cap"
};

namespace detail {

template <class S>
struct PullSelection {
  std::int64_t nu = 0;
  FiberInterval<S> own;       // component of the nu-pullback of T at center
  FiberInterval<S> entry;     // component of the nu-pullback of the landing
  std::int64_t landing_time = 0;
};

// Smallest nu with F^nu(center) interior to T such that the pull chain meets
// critical points at most n^2 times and the sampled critical orbit tail inside
// the own-component stays inside the entry-component.
template <class S>
PullSelection<S> select_pull_time(const ExtendedMap<S>& F,
                                  const FiberInterval<S>& T,
                                  const std::vector<FiberPoint<S>>& c_orbit,
                                  const EnhancedParams<S>& par) {
  const FiberPoint<S> c0{S(0), 0};
  const int cap = F.n() * F.n();
  for (std::int64_t nu = 1;
       nu < static_cast<std::int64_t>(c_orbit.size()); ++nu) {
    const FiberPoint<S>& p = c_orbit[static_cast<std::size_t>(nu)];
    if (!contains_interior(T, p)) continue;

    const Chain<S> chain = pullback_chain(F, c0, nu, T);
    int crit = chain.interior_critical_count();
    if (contains_interior(chain.front(), S(0))) ++crit;
    if (crit > cap) continue;

    const auto land = landing_component(F, p, IntervalSet<S>{T}, par.horizon);
    const Chain<S> entry_chain = pullback_chain(F, c0, nu, land.component);
    const FiberInterval<S> own = chain.front();
    const FiberInterval<S> entry = entry_chain.front();

    bool ok = true;
    const S slack = interior_margin_rel<S>() * own.length();
    const std::int64_t last =
        std::min(par.omega_burn + par.omega_samples,
                 static_cast<std::int64_t>(c_orbit.size()) - 1);
    for (std::int64_t s = par.omega_burn; s <= last && ok; ++s) {
      const FiberPoint<S>& w = c_orbit[static_cast<std::size_t>(s)];
      if (!contains_interior(own, w)) continue;
      if (w.fiber != entry.fiber || w.x < entry.lo - slack ||
          w.x > entry.hi + slack)
        ok = false;
    }
    if (!ok) continue;

    return PullSelection<S>{nu, own, entry, land.time};
  }
  throw domain_error("enhanced nest: no admissible pull time within horizon");
}

}  // namespace detail

// Builds E_0 = I_0 and E_{k+1} = five-fold-per-fiber successor iterate of the
// entry pullback of the landing pullback of E_k, recording entry times r_j and
// transfer step counts m_j. Stops at the first level whose entry time equals
// target_return_time (chi) or at k_max levels.
template <class S>
EnhancedNestReport<S> enhanced_nest(
    const ExtendedMap<S>& F, int k_max, std::int64_t target_return_time = 0,
    const EnhancedParams<S>& par = EnhancedParams<S>::defaults()) {
  using std::abs;
  EnhancedNestReport<S> rep;
  rep.target_return_time = target_return_time;
  const S a = abs(F.alpha);
  rep.levels.push_back(FiberInterval<S>{-a, a, 0});
  const FiberPoint<S> c0{S(0), 0};
  const auto c_orbit = detail::bounded_orbit(F, c0, par.horizon);

  for (int j = 0;; ++j) {
    const FiberInterval<S>& E = rep.levels.back();
    const auto entry = first_entry(F, c0, IntervalSet<S>{E}, par.horizon);
    if (!entry)
      throw domain_error("enhanced nest: critical orbit does not enter level");
    rep.entry_times.push_back(entry->time);
    if (target_return_time > 0 && entry->time == target_return_time) {
      rep.chi = j;
      rep.status = "chi-reached";
      return rep;
    }
    if (j >= k_max) {
      rep.status = "depth-cap";
      return rep;
    }

    // Landing-entry pullback pair over E_j, then the successor ladder.
    const auto first = detail::select_pull_time(F, E, c_orbit, par);
    std::int64_t m = first.nu + first.landing_time;
    bool valid = true;
    const auto second = detail::select_pull_time(F, first.entry, c_orbit, par);
    m += second.nu;
    FiberInterval<S> M = second.own;

    for (int i = 0; i < 5 * F.n(); ++i) {
      // At a map with a superstable bottom the ladder can reach the deepest
      // core, whose return has no reversing fixed point; stop the ladder
      // there and let the next entry-time check close the nest.
      try {
        const auto s = successor(F, M, par.succ);
        M = s.interval;
        m += s.total_steps;
        if (s.by_rescale) valid = false;
      } catch (const domain_error&) {
        valid = false;
        break;
      }
    }

    if (valid) {
      // Transfer must carry the boundary of the new level onto the boundary
      // of the old one.
      using std::pow;
      const S btol =
          pow(machine_eps<S>(), S(0.25)) * S(1e-2) + S(1e-9) * E.length();
      for (const S x : {M.lo, M.hi}) {
        try {
          const S y = iterate_value(F, x, M.fiber, m);
          if (abs(y - E.lo) > btol && abs(y - E.hi) > btol) valid = false;
        } catch (const domain_error&) {
          valid = false;
        }
      }
      try {
        const S mid = iterate_value(F, M.mid(), M.fiber, m);
        if (mid < E.lo - btol || mid > E.hi + btol) valid = false;
      } catch (const domain_error&) {
        valid = false;
      }
    }

    rep.transfer_steps.push_back(m);
    rep.transfer_valid.push_back(valid ? 1 : 0);
    rep.levels.push_back(M);
  }
}

// ---------------------------------------------------------------------------
// Scaling supremum estimate

// Enumerated lower bound for the scaling supremum: the largest level-to-next
// ratio seen in the nest, including the landing ratio of the deepest level.
// Monotone non-decreasing in nest depth.
template <class S>
S limit_scaling_estimate(const ExtendedMap<S>& F, const PrincipalNest<S>& nest,
                         std::int64_t horizon = 200000) {
  S best(0);
  for (const S& s : nest.scaling_factors) best = std::max(best, s);
  const FiberPoint<S> c0{S(0), 0};
  try {
    const auto land =
        landing_component(F, c0, IntervalSet<S>{nest.levels.back()}, horizon);
    best = std::max(best, nest.levels.back().length() /
                              land.component.length());
  } catch (const domain_error&) {
  }
  return best;
}

}  // namespace renormlab
