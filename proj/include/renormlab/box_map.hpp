#pragma once

#include <optional>
#include <vector>

#include "renormlab/map_core.hpp"

namespace renormlab {

// Open interval on one fiber of I_N = [-1,1] x {0..N-1}.
template <class S>
struct FiberInterval {
  S lo{};
  S hi{};
  int fiber = 0;

  S length() const { return hi - lo; }
  S mid() const { return (lo + hi) / S(2); }
};

template <class S>
using IntervalSet = std::vector<FiberInterval<S>>;

// Relative margin used when deciding interior vs boundary membership.
template <class S>
S interior_margin_rel() {
  if constexpr (std::is_same_v<S, double>) return 1e-10;
  return S(1e-30);
}

// Relative tolerance for root isolation in pullbacks and fixed-point solves.
template <class S>
S isolation_rel() {
  if constexpr (std::is_same_v<S, double>) return 1e-12;
  return S(1e-32);
}

template <class S>
bool contains_interior(const FiberInterval<S>& I, S x) {
  const S m = interior_margin_rel<S>() * I.length();
  return x > I.lo + m && x < I.hi - m;
}

template <class S>
bool contains_interior(const FiberInterval<S>& I, const FiberPoint<S>& p) {
  return p.fiber == I.fiber && contains_interior(I, p.x);
}

template <class S>
bool subset_of(const FiberInterval<S>& A, const FiberInterval<S>& B, S slack) {
  return A.fiber == B.fiber && A.lo >= B.lo - slack && A.hi <= B.hi + slack;
}

// F(x, j) = (f_j(x), j+1 mod N) together with the distinguished points used by
// the principal nest: the orientation-reversing fixed point of the fiber-0
// composite nearest 0, and its preimage nearest -1.
template <class S>
struct ExtendedMap {
  MultimodalMap<S> map;
  S alpha{};  // signed; |alpha| bounds I_0
  S beta{};

  int n() const { return map.n_type; }

  FiberPoint<S> step(const FiberPoint<S>& p) const {
    return FiberPoint<S>{eval(map.factors[p.fiber], p.x),
                         (p.fiber + 1) % map.n_type};
  }

  FiberPoint<S> iterate(FiberPoint<S> p, std::int64_t k) const {
    using std::abs;
    for (std::int64_t t = 0; t < k; ++t) {
      p = step(p);
      if (abs(p.x) > S(1) + S(1e-6)) throw domain_error("orbit escaped [-1,1]");
    }
    return p;
  }
};

// ---------------------------------------------------------------------------
// Fixed points and extension

namespace detail {

// Roots of h on (lo, hi), isolated by a sign scan over `cells` cells followed
// by bisection. Roots landing on grid nodes are nudged by the scan offset.
template <class S, class H>
std::vector<S> isolate_roots(H h, S lo, S hi, int cells) {
  std::vector<S> roots;
  S prev_x = lo;
  S prev_v = h(lo);
  for (int i = 1; i <= cells; ++i) {
    const S x = lo + (hi - lo) * S(i) / S(cells);
    const S v = h(x);
    if ((prev_v < S(0) && v > S(0)) || (prev_v > S(0) && v < S(0))) {
      S a = prev_x, b = x, fa = prev_v;
      for (int it = 0; it < bisection_steps<S>(); ++it) {
        const S m = (a + b) / S(2);
        const S fm = h(m);
        if ((fa < S(0)) == (fm < S(0))) {
          a = m;
          fa = fm;
        } else {
          b = m;
        }
      }
      roots.push_back((a + b) / S(2));
    } else if (prev_v == S(0)) {
      roots.push_back(prev_x);
    }
    prev_x = x;
    prev_v = v;
  }
  return roots;
}

}  // namespace detail

// Computes alpha and beta for the composite on fiber 0.
template <class S>
ExtendedMap<S> extend(const MultimodalMap<S>& m, int cells = 4096) {
  using std::abs;
  ExtendedMap<S> F{m, S(0), S(0)};
  auto fixed_fn = [&](S x) { return eval(m, x) - x; };
  const S edge = S(1) - S(16) * machine_eps<S>();
  std::vector<S> roots = detail::isolate_roots<S>(fixed_fn, -edge, edge, cells);
  bool found = false;
  for (const S& r : roots) {
    const Jet<S> j = eval_jet(m, jet_var(r));
    if (j.d1 < S(0) && (!found || abs(r) < abs(F.alpha))) {
      F.alpha = r;
      found = true;
    }
  }
  if (!found)
    throw domain_error("extend: no orientation-reversing fixed point");

  auto beta_fn = [&](S x) { return eval(m, x) - F.alpha; };
  std::vector<S> pre = detail::isolate_roots<S>(beta_fn, -edge, edge, cells);
  bool bfound = false;
  for (const S& r : pre) {
    if (!bfound || r < F.beta) {
      F.beta = r;
      bfound = true;
    }
  }
  if (!bfound) throw domain_error("extend: no preimage of alpha");
  return F;
}

// ---------------------------------------------------------------------------
// Branch inversion and pullbacks

namespace detail {

// Inverse of the decreasing branch u >= 0 of factor f: returns u in [0,1] with
// f(u) = y. Requires f(1) <= y <= f(0) up to the isolation tolerance.
template <class S>
S invert_branch(const UnimodalFactor<S>& f, S y) {
  const S top = eval(f, S(0));
  const S bot = eval(f, S(1));
  const S tol = isolation_rel<S>() * S(4);
  if (y > top) {
    if (y - top > tol) throw domain_error("pullback: value above critical value");
    return S(0);
  }
  if (y < bot) {
    if (bot - y > tol) throw domain_error("pullback: value below branch range");
    return S(1);
  }
  S a(0), b(1);  // f(a) >= y >= f(b)
  for (int it = 0; it < bisection_steps<S>(); ++it) {
    const S mid = (a + b) / S(2);
    if (eval(f, mid) >= y)
      a = mid;
    else
      b = mid;
  }
  return (a + b) / S(2);
}

}  // namespace detail

// Component of f_j^{-1}(target) on fiber j containing (or nearest) the seed.
// target must sit on fiber j+1.
template <class S>
FiberInterval<S> pullback_once(const ExtendedMap<S>& F,
                               const FiberInterval<S>& target, int fiber,
                               S seed) {
  const auto& f = F.map.factors[fiber];
  const S top = eval(f, S(0));
  if (target.lo >= top)
    throw domain_error("pullback: target above critical value");
  const S uc = detail::invert_branch(f, target.lo);
  if (target.hi >= top) {
    return FiberInterval<S>{-uc, uc, fiber};  // single symmetric component
  }
  const S ud = detail::invert_branch(f, target.hi);
  if (seed >= S(0)) return FiberInterval<S>{ud, uc, fiber};
  return FiberInterval<S>{-uc, -ud, fiber};
}

// Chain G_0, ..., G_k with F(G_s) inside G_{s+1} and G_k = target.
template <class S>
struct Chain {
  std::vector<FiberInterval<S>> links;

  const FiberInterval<S>& front() const { return links.front(); }
  std::int64_t steps() const {
    return static_cast<std::int64_t>(links.size()) - 1;
  }

  // Number of interior links (0 < s < k) containing a critical point.
  int interior_critical_count() const {
    int c = 0;
    for (std::size_t s = 1; s + 1 < links.size(); ++s)
      if (contains_interior(links[s], decltype(links[s].lo)(0))) ++c;
    return c;
  }
};

// Pullback of `target` along the orbit of x0 over k steps; the orbit point at
// each step seeds the component choice.
template <class S>
Chain<S> pullback_chain(const ExtendedMap<S>& F, const FiberPoint<S>& x0,
                        std::int64_t k, const FiberInterval<S>& target) {
  std::vector<FiberPoint<S>> orbit(static_cast<std::size_t>(k) + 1);
  orbit[0] = x0;
  for (std::int64_t s = 1; s <= k; ++s)
    orbit[static_cast<std::size_t>(s)] =
        F.step(orbit[static_cast<std::size_t>(s - 1)]);
  if (orbit.back().fiber != target.fiber)
    throw domain_error("pullback: fiber mismatch at chain end");

  Chain<S> chain;
  chain.links.assign(static_cast<std::size_t>(k) + 1, FiberInterval<S>{});
  chain.links.back() = target;
  for (std::int64_t s = k - 1; s >= 0; --s) {
    const auto& p = orbit[static_cast<std::size_t>(s)];
    chain.links[static_cast<std::size_t>(s)] = pullback_once(
        F, chain.links[static_cast<std::size_t>(s + 1)], p.fiber, p.x);
  }
  return chain;
}

// ---------------------------------------------------------------------------
// First entry and landing

template <class S>
struct EntryResult {
  std::int64_t time = 0;
  int component = 0;  // index into the interval set
};

template <class S>
std::optional<EntryResult<S>> first_entry(const ExtendedMap<S>& F,
                                          const FiberPoint<S>& x0,
                                          const IntervalSet<S>& B,
                                          std::int64_t horizon) {
  FiberPoint<S> p = x0;
  for (std::int64_t k = 1; k <= horizon; ++k) {
    p = F.step(p);
    using std::abs;
    if (abs(p.x) > S(1) + S(1e-6)) throw domain_error("orbit escaped [-1,1]");
    for (std::size_t i = 0; i < B.size(); ++i)
      if (contains_interior(B[i], p))
        return EntryResult<S>{k, static_cast<int>(i)};
  }
  return std::nullopt;
}

template <class S>
struct LandingResult {
  FiberInterval<S> component;
  std::int64_t time = 0;
  int target = 0;
  Chain<S> chain;
};

// Component of the first-entry domain of B containing x0: the entered
// component pulled back along the orbit, splitting at critical preimages.
template <class S>
LandingResult<S> landing_component(const ExtendedMap<S>& F,
                                   const FiberPoint<S>& x0,
                                   const IntervalSet<S>& B,
                                   std::int64_t horizon) {
  auto entry = first_entry(F, x0, B, horizon);
  if (!entry) throw domain_error("landing: no entry within horizon");
  Chain<S> chain = pullback_chain(F, x0, entry->time,
                                  B[static_cast<std::size_t>(entry->component)]);
  return LandingResult<S>{chain.front(), entry->time, entry->component,
                          std::move(chain)};
}

// L-hat: the component of B containing x when x lies inside B, the landing
// component otherwise.
template <class S>
LandingResult<S> landing_or_component(const ExtendedMap<S>& F,
                                      const FiberPoint<S>& x0,
                                      const IntervalSet<S>& B,
                                      std::int64_t horizon) {
  for (std::size_t i = 0; i < B.size(); ++i) {
    if (contains_interior(B[i], x0)) {
      LandingResult<S> r;
      r.component = B[i];
      r.time = 0;
      r.target = static_cast<int>(i);
      r.chain.links = {B[i]};
      return r;
    }
  }
  return landing_component(F, x0, B, horizon);
}

// ---------------------------------------------------------------------------
// Niceness

template <class S>
struct NicenessWitness {
  int component = 0;
  S endpoint{};
  std::int64_t time = 0;
};

template <class S>
struct NicenessReport {
  bool nice = true;
  std::int64_t horizon = 0;
  std::optional<NicenessWitness<S>> witness;
};

// Checks that no boundary orbit re-enters the interior of B within the
// horizon. A clean verdict is only as strong as the horizon.
template <class S>
NicenessReport<S> is_nice(const ExtendedMap<S>& F, const IntervalSet<S>& B,
                          std::int64_t horizon) {
  NicenessReport<S> rep;
  rep.horizon = horizon;
  for (std::size_t i = 0; i < B.size(); ++i) {
    for (const S e : {B[i].lo, B[i].hi}) {
      FiberPoint<S> p{e, B[i].fiber};
      for (std::int64_t k = 1; k <= horizon; ++k) {
        p = F.step(p);
        using std::abs;
        if (abs(p.x) > S(1) + S(1e-6)) break;
        bool inside = false;
        for (const auto& J : B)
          if (contains_interior(J, p)) inside = true;
        if (inside) {
          rep.nice = false;
          rep.witness = NicenessWitness<S>{static_cast<int>(i), e, k};
          return rep;
        }
      }
    }
  }
  return rep;
}

// Image of an interval under the fiber factor: endpoint values plus the
// critical value when the interval straddles 0.
template <class S>
FiberInterval<S> image_interval(const ExtendedMap<S>& F,
                                const FiberInterval<S>& I) {
  const auto& f = F.map.factors[I.fiber];
  const S va = eval(f, I.lo);
  const S vb = eval(f, I.hi);
  S lo = va < vb ? va : vb;
  S hi = va < vb ? vb : va;
  if (I.lo < S(0) && I.hi > S(0)) {
    const S vc = eval(f, S(0));
    if (vc > hi) hi = vc;
    if (vc < lo) lo = vc;
  }
  return FiberInterval<S>{lo, hi, (I.fiber + 1) % F.n()};
}

}  // namespace renormlab
