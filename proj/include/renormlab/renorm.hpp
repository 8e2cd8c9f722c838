#pragma once

// Periodic-interval detection, the renormalization operator, and towers of
// repeated renormalization.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "renormlab/box_map.hpp"

namespace renormlab {

// ---------------------------------------------------------------------------
// Periodic intervals

template <class S>
struct PeriodicInterval {
  int p = 0;                              // per-fiber period
  std::int64_t k = 0;                     // full step period, k = n * p
  FiberInterval<S> J;                     // symmetric interval on fiber 0
  S boundary_point{};                     // signed periodic root on the boundary
  std::vector<std::int64_t> visit_times;  // ascending times whose image holds
                                          // a critical point; starts with 0
  std::vector<S> normalizer_scales;       // boundary orbit at the visit times
};

template <class S>
struct RenormParams {
  int max_period = 12;
  int exact_period = 0;            // 0: smallest admissible; else only this p
  S reject_radius = S(1e-8);       // discard near-degenerate roots
  S overlap_tol = S(1e-10) * S(2); // absolute interior-overlap tolerance
  int invariance_samples = 256;

  static RenormParams defaults() { return RenormParams{}; }
};

namespace detail {

// Checks one symmetric candidate against the periodic-interval conditions:
// invariance of the k-th image, pairwise disjoint interiors of the first k
// images, and exactly one strictly-interior critical visit per other fiber.
template <class S>
std::optional<PeriodicInterval<S>> verify_periodic_candidate(
    const MultimodalMap<S>& m, S z, int p, const RenormParams<S>& par) {
  using std::abs;
  const int n = m.n_type;
  const std::int64_t k = static_cast<std::int64_t>(n) * p;
  const S az = abs(z);
  const ExtendedMap<S> F{m, S(0), S(0)};
  const FiberInterval<S> J{-az, az, 0};

  std::vector<FiberInterval<S>> imgs;
  imgs.reserve(static_cast<std::size_t>(k) + 1);
  imgs.push_back(J);
  for (std::int64_t t = 1; t <= k; ++t) {
    imgs.push_back(image_interval(F, imgs.back()));
    if (!(abs(imgs.back().lo) <= S(1) + S(1e-6)) ||
        !(abs(imgs.back().hi) <= S(1) + S(1e-6)))
      return std::nullopt;
  }

  // Invariance: the k-th image returns into J, re-checked pointwise.
  const S slack = par.overlap_tol;
  if (!subset_of(imgs.back(), J, slack)) return std::nullopt;
  for (int i = 0; i <= par.invariance_samples; ++i) {
    const S x = J.lo + J.length() * S(i) / S(par.invariance_samples);
    S y;
    try {
      y = F.iterate(FiberPoint<S>{x, 0}, k).x;
    } catch (const domain_error&) {
      return std::nullopt;
    }
    if (y < J.lo - slack || y > J.hi + slack) return std::nullopt;
  }

  // Pairwise disjoint interiors of the cycle.
  for (std::int64_t t = 0; t < k; ++t)
    for (std::int64_t s = t + 1; s < k; ++s) {
      const auto& A = imgs[static_cast<std::size_t>(t)];
      const auto& B = imgs[static_cast<std::size_t>(s)];
      if (A.fiber != B.fiber) continue;
      const S overlap = std::min(A.hi, B.hi) - std::max(A.lo, B.lo);
      if (overlap > par.overlap_tol) return std::nullopt;
    }

  // Critical visits: each other fiber's critical must lie in the closure of
  // exactly one cycle interval.  Superstable parameters put the critical
  // exactly on an endpoint (it is the image of the folded center), so a
  // touching interval counts as the visit; every factor is even around its
  // critical, so symmetrizing such an interval does not change its forward
  // orbit.  Two touched intervals in one fiber are ambiguous and rejected.
  std::vector<std::int64_t> visits{0};
  for (int j = 1; j < n; ++j) {
    std::int64_t hit = -1;
    for (std::int64_t t = 1; t < k; ++t) {
      const auto& img = imgs[static_cast<std::size_t>(t)];
      if (img.fiber != j) continue;
      const S margin = S(1e-10) * img.length();
      if (img.lo - margin > S(0) || img.hi + margin < S(0)) continue;
      if (hit >= 0) return std::nullopt;
      hit = t;
    }
    if (hit < 0) return std::nullopt;
    visits.push_back(hit);
  }
  std::sort(visits.begin(), visits.end());

  PeriodicInterval<S> out;
  out.p = p;
  out.k = k;
  out.J = J;
  out.boundary_point = z;
  out.visit_times = visits;
  out.normalizer_scales.reserve(visits.size());
  for (std::int64_t t : visits)
    out.normalizer_scales.push_back(F.iterate(FiberPoint<S>{z, 0}, t).x);
  return out;
}

}  // namespace detail

// Smallest per-fiber period p >= 2 with a widest symmetric interval whose
// cycle satisfies the periodic-interval conditions. Absence is a valid
// outcome.
template <class S>
std::optional<PeriodicInterval<S>> find_periodic_interval(
    const MultimodalMap<S>& m,
    const RenormParams<S>& par = RenormParams<S>::defaults()) {
  using std::abs;
  const int n = m.n_type;
  const ExtendedMap<S> F{m, S(0), S(0)};
  const S edge = S(1) - S(16) * machine_eps<S>();
  // The step budget is shared across fibers, so the per-fiber bound shrinks
  // with the type.
  const int pmax = std::max(2, par.max_period / n);
  const int pfirst = par.exact_period > 0 ? par.exact_period : 2;
  const int plast = par.exact_period > 0 ? par.exact_period : pmax;
  for (int p = pfirst; p <= plast; ++p) {
    const std::int64_t k = static_cast<std::int64_t>(n) * p;
    auto h = [&](S x) { return F.iterate(FiberPoint<S>{x, 0}, k).x - x; };
    std::vector<S> roots = detail::isolate_roots<S>(h, -edge, edge, 4096);
    std::sort(roots.begin(), roots.end(),
              [](const S& a, const S& b) { return abs(a) > abs(b); });
    for (const S& z : roots) {
      if (abs(z) < par.reject_radius) continue;
      auto cand = detail::verify_periodic_candidate(m, z, p, par);
      if (cand) return cand;
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Renormalization

template <class S>
struct RenormResult {
  MultimodalMap<S> map;     // rescaled return map, same type as the input
  PeriodicInterval<S> data;
};

// Rescaled first-return map assembled from iterate segments between critical
// visits. Factor i walks the base map from visit i to visit i+1 between the
// affine normalizers that send each visit scale to [-1, 1].
template <class S>
RenormResult<S> renormalize_with(const MultimodalMap<S>& m,
                                 const PeriodicInterval<S>& data) {
  using std::abs;
  const int n = m.n_type;
  auto base = std::make_shared<const MultimodalMap<S>>(m);

  MultimodalMap<S> out;
  out.n_type = n;
  out.precision = m.precision;
  for (int i = 0; i < n; ++i) {
    const std::int64_t t_i = data.visit_times[static_cast<std::size_t>(i)];
    const std::int64_t t_next =
        (i + 1 < n) ? data.visit_times[static_cast<std::size_t>(i) + 1]
                    : data.k;
    const S zeta_i = data.normalizer_scales[static_cast<std::size_t>(i)];
    const S zeta_next = (i + 1 < n)
                            ? data.normalizer_scales[static_cast<std::size_t>(i) + 1]
                            : data.normalizer_scales[0];
    IterateSegment<S> seg;
    seg.base = base;
    seg.start_fiber = static_cast<int>(t_i % n);
    seg.count = t_next - t_i;
    seg.in = Affine<S>{-zeta_i, S(0)};
    seg.out = Affine<S>{S(-1) / zeta_next, S(0)};
    out.factors.push_back(UnimodalFactor<S>{seg});
  }

  const auto report = validate(out);
  if (!report.ok) {
    for (const auto& c : report.checks)
      if (!c.pass)
        throw domain_error("renormalize: validation failed: " + c.name);
    throw domain_error("renormalize: validation failed");
  }

  // The factor chain must telescope to the normalized full return.
  const S zeta0 = data.normalizer_scales[0];
  const ExtendedMap<S> F{m, S(0), S(0)};
  S worst(0);
  for (int i = 0; i <= 256; ++i) {
    const S x = S(-1) + S(2) * S(i) / S(256);
    const S via_factors = eval(out, x);
    const S direct =
        F.iterate(FiberPoint<S>{-zeta0 * x, 0}, data.k).x / (-zeta0);
    worst = std::max(worst, abs(via_factors - direct));
  }
  if (worst > S(1e-10))
    throw domain_error("renormalize: factor chain mismatch with direct return");

  return RenormResult<S>{out, data};
}

template <class S>
RenormResult<S> renormalize(
    const MultimodalMap<S>& m,
    const RenormParams<S>& par = RenormParams<S>::defaults()) {
  auto data = find_periodic_interval(m, par);
  if (!data) throw domain_error("renormalize: no periodic interval");
  return renormalize_with(m, *data);
}

// ---------------------------------------------------------------------------
// Towers

template <class S>
struct RenormTower {
  std::vector<RenormResult<S>> levels;
  std::string status;  // "depth-reached" | "not-renormalizable"
};

template <class S>
RenormTower<S> renorm_tower(
    const MultimodalMap<S>& m, int depth,
    const RenormParams<S>& par = RenormParams<S>::defaults()) {
  RenormTower<S> tower;
  MultimodalMap<S> cur = m;
  for (int d = 0; d < depth; ++d) {
    auto data = find_periodic_interval(cur, par);
    if (!data) {
      tower.status = "not-renormalizable";
      return tower;
    }
    // a level whose return map cannot be certified ends the tower rather
    // than aborting the whole search
    try {
      tower.levels.push_back(renormalize_with(cur, *data));
    } catch (const domain_error&) {
      tower.status = "not-renormalizable";
      return tower;
    }
    cur = tower.levels.back().map;
  }
  tower.status = "depth-reached";
  return tower;
}

}  // namespace renormlab
