#pragma once

// Parameter tuning in the quadratic family: superstable realization of tower
// words, doubling-cascade ratios, restrictive-interval scaling, and the
// measured contraction of repeated renormalization.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "renormlab/combinatorics.hpp"
#include "renormlab/renorm.hpp"

namespace renormlab {

template <class S>
struct FamilySpec {
  int n_type = 1;
  std::vector<S> box_lo;
  std::vector<S> box_hi;
  S param_tol = S(64) * machine_eps<S>();
  int scan_cells = 8192;                   // cells for one-parameter root scans
  std::int64_t max_total_steps = 1 << 14;  // budget on a word's full period

  static FamilySpec defaults(int n = 1) {
    FamilySpec f;
    f.n_type = n;
    f.box_lo.assign(static_cast<std::size_t>(n), S(-2) + S(1e-9));
    f.box_hi.assign(static_cast<std::size_t>(n), S(-1) - S(1e-9));
    return f;
  }
};

template <class S>
struct TuneResult {
  std::vector<S> b;
  std::vector<Combinatorics> word;
  S residual{};        // deepest critical return distance from 0
  std::string method;  // "bisection" | "newton" | "aitken"
  S bracket_width{};
  bool best_effort = false;
};

template <class S>
struct ContractionFit {
  std::vector<S> distances;  // d_k, k = 0..depth
  double rate = 0.0;         // fitted per-level decay factor
  double constant = 0.0;
  double r_squared = 0.0;
  int fitted_points = 0;
  bool exact_coincidence = false;
};

namespace detail {

template <class S>
void check_family(const FamilySpec<S>& fam) {
  const std::size_t n = static_cast<std::size_t>(fam.n_type);
  if (fam.n_type < 1 || fam.box_lo.size() != n || fam.box_hi.size() != n)
    throw domain_error("tune: malformed family box");
  for (std::size_t j = 0; j < n; ++j)
    if (!(S(-2) <= fam.box_lo[j] && fam.box_lo[j] < fam.box_hi[j] &&
          fam.box_hi[j] <= S(-1)))
      throw domain_error("tune: parameter box outside admissible region");
}

// Orbit of the critical point of fiber 0. Every factor maps [-1,1] into
// itself on the whole admissible box, so the walk cannot escape.
template <class S>
S critical_return(const std::vector<S>& b, std::int64_t steps) {
  const int n = static_cast<int>(b.size());
  S x(0);
  int fiber = 0;
  for (std::int64_t t = 0; t < steps; ++t) {
    const S& bf = b[static_cast<std::size_t>(fiber)];
    x = bf * x * x - bf - S(1);
    fiber = (fiber + 1) % n;
  }
  return x;
}

// Bisection whose bracket keeps opposite signs at both ends at every step;
// the final width is the certificate. Returns (root, width).
template <class S, class H>
std::optional<std::pair<S, S>> certified_bisection(H h, S lo, S hi, S tol) {
  S flo = h(lo);
  S fhi = h(hi);
  if (flo == S(0)) return std::make_pair(lo, S(0));
  if (fhi == S(0)) return std::make_pair(hi, S(0));
  if ((flo < S(0)) == (fhi < S(0))) return std::nullopt;
  while (hi - lo > tol) {
    const S mid = (lo + hi) / S(2);
    if (mid <= lo || mid >= hi) break;
    const S fm = h(mid);
    if (fm == S(0)) return std::make_pair(mid, S(0));
    if ((fm < S(0)) == (flo < S(0))) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
      fhi = fm;
    }
  }
  return std::make_pair((lo + hi) / S(2), hi - lo);
}

// Independent check that a parameter vector realizes the tower word: the
// return is genuinely deepest (no critical return at a proper divisor time)
// and the extracted tower words match level by level.
template <class S>
bool realizes_word(const std::vector<S>& b,
                   const std::vector<Combinatorics>& word,
                   std::int64_t full_period) {
  using std::abs;
  const int n = static_cast<int>(b.size());
  for (std::int64_t d = n; d < full_period; d += n) {
    if (full_period % d != 0) continue;
    if (abs(critical_return(b, d)) < S(1e-9)) return false;
  }
  int max_m = 2;
  for (const auto& w : word) max_m = std::max(max_m, w.m);
  RenormParams<S> par;
  par.max_period = n * max_m;
  const MultimodalMap<S> m = build_quadratic_family<S>(b);
  const RenormTower<S> tower =
      renorm_tower(m, static_cast<int>(word.size()), par);
  if (tower.levels.size() != word.size()) return false;
  std::vector<Combinatorics> got;
  try {
    got = tower_words(m, tower);
  } catch (const domain_error&) {
    return false;
  }
  for (std::size_t i = 0; i < word.size(); ++i)
    if (got[i].text != word[i].text) return false;
  return true;
}

}  // namespace detail

namespace detail {

template <class S>
struct CascadeLadder {
  std::vector<S> b;
  S last_width{};
};

// Doubling-cascade superstable parameters, levels 1..n_max. Each window is
// bracketed inside the gap left by the previous two levels and certified by
// sign-change bisection (refined to machine width, so the table does not
// depend on any sampling choice) plus a deepest-return check.
template <class S>
CascadeLadder<S> cascade_ladder(const FamilySpec<S>& family, int n_max) {
  using std::abs;
  check_family(family);
  if (family.n_type != 1)
    throw domain_error("cascade: one-parameter families only");
  if (n_max < 1) throw domain_error("cascade: need at least one level");
  if ((std::int64_t(1) << n_max) > family.max_total_steps)
    throw domain_error("cascade: step period exceeds budget");

  CascadeLadder<S> out;
  S prev2 = S(-1);  // superstable fixed point anchors the first gap
  {
    auto h = [](S b) { return critical_return<S>({b}, 2); };
    auto r = certified_bisection(h, family.box_lo[0], family.box_hi[0], S(0));
    if (!r) throw domain_error("cascade: no doubling window in box");
    out.b.push_back(r->first);
    out.last_width = r->second;
  }
  for (int n = 2; n <= n_max; ++n) {
    const S prev = out.b.back();
    const S gap = prev - prev2;
    const std::int64_t steps = std::int64_t(1) << n;
    auto h = [&](S b) { return critical_return<S>({b}, steps); };
    // the next window sits near prev + gap/4.67; widen the slice on misses
    const double fracs[][2] = {
        {0.10, 0.24}, {0.05, 0.26}, {0.02, 0.30}, {0.005, 0.45}};
    std::optional<std::pair<S, S>> root;
    for (const auto& fr : fracs) {
      const S bhi = prev + S(fr[0]) * gap;
      const S blo = prev + S(fr[1]) * gap;
      root = certified_bisection(h, blo, bhi, S(0));
      if (!root) continue;
      bool deepest = true;
      for (std::int64_t d = 1; d < steps && deepest; d *= 2)
        deepest = abs(critical_return<S>({root->first}, d)) > S(1e-9);
      if (deepest) break;
      root.reset();
    }
    if (!root)
      throw domain_error("cascade: lost the doubling window at level " +
                         std::to_string(n));
    prev2 = prev;
    out.b.push_back(root->first);
    out.last_width = root->second;
  }
  return out;
}

}  // namespace detail

// Superstable parameters of the doubling cascade, levels 1..n_max.
template <class S>
std::vector<S> cascade_parameters(const FamilySpec<S>& family, int n_max) {
  return detail::cascade_ladder(family, n_max).b;
}

// Ratios (b_{n-1} - b_{n-2}) / (b_n - b_{n-1}) for n = 3..n_max along the
// doubling cascade.
template <class S>
std::vector<S> feigenbaum_delta(const FamilySpec<S>& family, int n_max) {
  if (n_max < 3) throw domain_error("delta: need n_max >= 3");
  const std::vector<S> b = cascade_parameters(family, n_max);
  std::vector<S> delta;
  delta.reserve(static_cast<std::size_t>(n_max - 2));
  for (int n = 3; n <= n_max; ++n)
    delta.push_back(
        (b[static_cast<std::size_t>(n - 2)] - b[static_cast<std::size_t>(n - 3)]) /
        (b[static_cast<std::size_t>(n - 1)] - b[static_cast<std::size_t>(n - 2)]));
  return delta;
}

// Cascade accumulation parameter via two rounds of Aitken acceleration on
// the superstable ladder; bracket_width reports the last correction.
template <class S>
TuneResult<S> accumulation_parameter(const FamilySpec<S>& family,
                                     int n_max = 12) {
  using std::abs;
  std::vector<S> v = cascade_parameters(family, n_max);
  if (v.size() < 3)
    throw domain_error("accumulation: need at least three levels");
  S est = v.back();
  S width = abs(v[v.size() - 1] - v[v.size() - 2]);
  for (int round = 0; round < 2 && v.size() >= 3; ++round) {
    std::vector<S> w;
    for (std::size_t i = 0; i + 2 < v.size(); ++i) {
      const S d2 = v[i + 2] - S(2) * v[i + 1] + v[i];
      if (d2 == S(0)) break;
      const S d1 = v[i + 2] - v[i + 1];
      w.push_back(v[i + 2] - d1 * d1 / d2);
    }
    if (w.empty()) break;
    width = abs(w.back() - est);
    est = w.back();
    v = std::move(w);
  }
  TuneResult<S> out;
  out.b = {est};
  out.method = "aitken";
  out.residual = width;
  out.bracket_width = width;
  return out;
}

namespace detail {

// Damped Newton realization for multi-parameter families: the critical orbit
// of fiber 0 must hit a critical point at each time the word marks critical,
// and close up at the full period.
template <class S>
TuneResult<S> tune_newton(const FamilySpec<S>& family,
                          const std::vector<Combinatorics>& word,
                          const Combinatorics& whole) {
  using std::abs;
  const int n = family.n_type;
  const CombinatorialData D = parse_combinatorics(whole.text);
  if (!single_cycle(D))
    throw domain_error("tune: word must be single-cycle");
  const std::int64_t K = static_cast<std::int64_t>(n) * whole.m;

  // canonical single-cycle labels are numbered along the orbit, so label t
  // is orbit time t
  std::vector<std::int64_t> targets;
  for (std::int64_t t = 1; t < K; ++t)
    if (D.is_critical[static_cast<std::size_t>(t)]) targets.push_back(t);
  targets.push_back(K);
  if (static_cast<int>(targets.size()) != n)
    throw domain_error("tune: word does not define a square system");

  // orbit values and parameter sensitivities at the target times
  auto system = [&](const Eigen::VectorXd& b, Eigen::VectorXd& G,
                    Eigen::MatrixXd* J) {
    double x = 0.0;
    Eigen::RowVectorXd M = Eigen::RowVectorXd::Zero(n);
    std::size_t hit = 0;
    for (std::int64_t t = 0; t < K; ++t) {
      const int f = static_cast<int>(t % n);
      const double bf = b[f];
      if (J) M = 2.0 * bf * x * M;
      if (J) M[f] += x * x - 1.0;
      x = bf * x * x - bf - 1.0;
      if (hit < targets.size() && t + 1 == targets[hit]) {
        G[static_cast<Eigen::Index>(hit)] = x;
        if (J) J->row(static_cast<Eigen::Index>(hit)) = M;
        ++hit;
      }
    }
  };

  // coarse grid seeds ranked by residual norm
  const int per_axis = std::max(
      8, static_cast<int>(std::floor(std::pow(32768.0, 1.0 / n))));
  std::vector<double> lo(static_cast<std::size_t>(n)),
      hi(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    lo[static_cast<std::size_t>(j)] = to_double(family.box_lo[static_cast<std::size_t>(j)]);
    hi[static_cast<std::size_t>(j)] = to_double(family.box_hi[static_cast<std::size_t>(j)]);
  }
  std::vector<std::pair<double, Eigen::VectorXd>> seeds;
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  Eigen::VectorXd G(n);
  for (;;) {
    Eigen::VectorXd b(n);
    for (int j = 0; j < n; ++j) {
      const double u = (idx[static_cast<std::size_t>(j)] + 0.5) / per_axis;
      b[j] = lo[static_cast<std::size_t>(j)] +
             u * (hi[static_cast<std::size_t>(j)] - lo[static_cast<std::size_t>(j)]);
    }
    system(b, G, nullptr);
    seeds.emplace_back(G.template lpNorm<Eigen::Infinity>(), b);
    int j = n - 1;
    while (j >= 0 && ++idx[static_cast<std::size_t>(j)] == per_axis)
      idx[static_cast<std::size_t>(j--)] = 0;
    if (j < 0) break;
  }
  std::sort(seeds.begin(), seeds.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  // keep the best seeds subject to pairwise separation, so distinct solution
  // basins of the same hit-time system all get visited
  std::vector<Eigen::VectorXd> picked;
  for (const auto& seed : seeds) {
    if (picked.size() >= 24) break;
    bool fresh = true;
    for (const auto& p : picked)
      if ((p - seed.second).template lpNorm<Eigen::Infinity>() < 0.02) {
        fresh = false;
        break;
      }
    if (fresh) picked.push_back(seed.second);
  }

  std::vector<Eigen::VectorXd> roots;
  for (const auto& seed : picked) {
    Eigen::VectorXd b = seed;
    Eigen::MatrixXd J(n, n);
    bool converged = false;
    for (int iter = 0; iter < 120; ++iter) {
      system(b, G, &J);
      if (G.template lpNorm<Eigen::Infinity>() < 1e-13) {
        converged = true;
        break;
      }
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(J);
      if (qr.rank() < n) {
        // finite-difference fallback for a degenerate sensitivity matrix
        const double h = 1e-7;
        Eigen::VectorXd gp(n), gm(n);
        for (int j = 0; j < n; ++j) {
          Eigen::VectorXd bp = b, bm = b;
          bp[j] += h;
          bm[j] -= h;
          system(bp, gp, nullptr);
          system(bm, gm, nullptr);
          J.col(j) = (gp - gm) / (2.0 * h);
        }
        qr.compute(J);
        if (qr.rank() < n) break;
      }
      const Eigen::VectorXd step = qr.solve(-G);
      b += 0.5 * step;
      for (int j = 0; j < n; ++j)
        b[j] = std::min(hi[static_cast<std::size_t>(j)],
                        std::max(lo[static_cast<std::size_t>(j)], b[j]));
    }
    if (!converged) continue;
    bool dup = false;
    for (const auto& r : roots)
      if ((r - b).template lpNorm<Eigen::Infinity>() < 1e-8) {
        dup = true;
        break;
      }
    if (!dup) roots.push_back(b);
  }

  std::string realized;
  for (const auto& r : roots) {
    std::vector<S> bs(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) bs[static_cast<std::size_t>(j)] = S(r[j]);
    if (!realizes_word(bs, word, K)) {
      if (realized.empty()) {
        try {
          const MultimodalMap<S> m = build_quadratic_family<S>(bs);
          RenormParams<S> par;
          par.max_period = static_cast<int>(K);
          auto data = find_periodic_interval(m, par);
          if (data) realized = canonical_form(extract(m, *data)).text;
        } catch (const domain_error&) {
        }
      }
      continue;
    }
    TuneResult<S> out;
    out.b = bs;
    out.word = word;
    out.residual = S(0);
    for (std::int64_t t : targets)
      out.residual = std::max(out.residual, abs(critical_return(bs, t)));
    out.method = "newton";
    out.best_effort = true;
    return out;
  }
  if (!realized.empty())
    throw domain_error("tune: verification mismatch: realized " + realized);
  throw domain_error("tune: word not realized in box");
}

}  // namespace detail

// Parameter with a superstable tower realizing the word. One-parameter
// families bisect on the deepest critical return; wider families run damped
// Newton from grid seeds. Every result is verified by re-extraction.
template <class S>
TuneResult<S> superstable_parameter(const FamilySpec<S>& family,
                                    const std::vector<Combinatorics>& word) {
  using std::abs;
  detail::check_family(family);
  if (word.empty()) throw domain_error("tune: empty word");
  for (const auto& w : word)
    if (w.n_type != family.n_type)
      throw domain_error("tune: word type mismatch");
  Combinatorics whole = word[0];
  for (std::size_t i = 1; i < word.size(); ++i)
    whole = product(whole, word[i]);
  const std::int64_t K = static_cast<std::int64_t>(whole.n_type) * whole.m;
  if (K > family.max_total_steps)
    throw domain_error("tune: step period exceeds budget");
  if (family.n_type != 1) return detail::tune_newton(family, word, whole);

  const std::string m2 = doubling_combinatorics().text;
  const bool pure_doubling =
      std::all_of(word.begin(), word.end(),
                  [&](const Combinatorics& w) { return w.text == m2; });
  if (pure_doubling && word.size() >= 2) {
    const detail::CascadeLadder<S> ladder =
        detail::cascade_ladder(family, static_cast<int>(word.size()));
    const S b = ladder.b.back();
    if (!detail::realizes_word<S>({b}, word, K))
      throw domain_error("tune: verification mismatch on cascade ladder");
    TuneResult<S> out;
    out.b = {b};
    out.word = word;
    out.residual = abs(detail::critical_return<S>({b}, K));
    out.method = "bisection";
    out.bracket_width = ladder.last_width;
    return out;
  }

  auto h = [&](S x) { return detail::critical_return<S>({x}, K); };
  std::vector<S> roots = detail::isolate_roots<S>(
      h, family.box_lo[0], family.box_hi[0], family.scan_cells);
  std::sort(roots.begin(), roots.end());
  int windows = 0;
  for (const S& r : roots) {
    ++windows;
    if (!detail::realizes_word<S>({r}, word, K)) continue;
    S w = std::max(abs(r) * S(16) * machine_eps<S>(), family.param_tol / S(8));
    std::optional<std::pair<S, S>> rb;
    for (int it = 0; it < 40 && !rb; ++it, w *= S(2)) {
      const S lo = std::max(family.box_lo[0], r - w);
      const S hi = std::min(family.box_hi[0], r + w);
      rb = detail::certified_bisection(h, lo, hi, family.param_tol);
    }
    if (!rb) continue;
    if (!detail::realizes_word<S>({rb->first}, word, K)) continue;
    TuneResult<S> out;
    out.b = {rb->first};
    out.word = word;
    out.residual = abs(h(rb->first));
    out.method = "bisection";
    out.bracket_width = rb->second;
    return out;
  }
  throw domain_error("tune: word not realized in box (" +
                     std::to_string(windows) + " return windows inspected)");
}

// Widths of the restrictive intervals pulled back to level-0 coordinates,
// reported as consecutive ratios |J_n| / |J_{n+1}| with J_0 = [-1,1].
template <class S>
std::vector<S> feigenbaum_alpha(
    const MultimodalMap<S>& m, int depth,
    const RenormParams<S>& par = RenormParams<S>::defaults()) {
  using std::abs;
  if (depth < 1) throw domain_error("alpha: depth must be positive");
  const RenormTower<S> tower = renorm_tower(m, depth, par);
  if (static_cast<int>(tower.levels.size()) != depth)
    throw domain_error("alpha: tower depth not reached");
  std::vector<S> ratios;
  ratios.reserve(static_cast<std::size_t>(depth));
  S width(2);
  for (const auto& level : tower.levels) {
    const S half = abs(level.data.normalizer_scales[0]);
    const S next = width * half;  // pullback scales by the level normalizer
    ratios.push_back(width / next);
    width = next;
  }
  return ratios;
}

// Sup-distance of corresponding factors over [-1,1] after k renormalizations
// of each map, with a log-linear fit of the decay. Levels below the 1e-12
// sampling floor are excluded from the fit.
template <class S>
ContractionFit<S> contraction_rate(const MultimodalMap<S>& f,
                                   const MultimodalMap<S>& g, int depth,
                                   int samples = 512) {
  using std::abs;
  using std::log;
  if (depth < 1) throw domain_error("contraction: depth must be positive");
  if (f.n_type != g.n_type) throw domain_error("contraction: type mismatch");
  const RenormTower<S> tf = renorm_tower(f, depth);
  const RenormTower<S> tg = renorm_tower(g, depth);
  if (static_cast<int>(tf.levels.size()) != depth ||
      static_cast<int>(tg.levels.size()) != depth)
    throw domain_error("contraction: tower depth not reached");
  const std::vector<Combinatorics> wf = tower_words(f, tf);
  const std::vector<Combinatorics> wg = tower_words(g, tg);
  for (int k = 0; k < depth; ++k)
    if (wf[static_cast<std::size_t>(k)].text !=
        wg[static_cast<std::size_t>(k)].text)
      throw domain_error("contraction: word mismatch at level " +
                         std::to_string(k + 1));

  ContractionFit<S> out;
  for (int k = 0; k <= depth; ++k) {
    const MultimodalMap<S>& rf =
        k == 0 ? f : tf.levels[static_cast<std::size_t>(k - 1)].map;
    const MultimodalMap<S>& rg =
        k == 0 ? g : tg.levels[static_cast<std::size_t>(k - 1)].map;
    S d(0);
    for (int j = 0; j < f.n_type; ++j)
      for (int i = 0; i <= samples; ++i) {
        const S x = S(-1) + S(2) * S(i) / S(samples);
        const S dev = abs(eval(rf.factors[static_cast<std::size_t>(j)], x) -
                          eval(rg.factors[static_cast<std::size_t>(j)], x));
        if (dev > d) d = dev;
      }
    out.distances.push_back(d);
  }

  std::vector<double> ks, ys;
  for (int k = 0; k <= depth; ++k) {
    const double d = to_double(out.distances[static_cast<std::size_t>(k)]);
    if (d > 1e-12) {
      ks.push_back(static_cast<double>(k));
      ys.push_back(std::log(d));
    }
  }
  out.fitted_points = static_cast<int>(ks.size());
  if (ks.empty()) {
    out.exact_coincidence = true;
    return out;
  }
  if (ks.size() == 1) {
    out.rate = 1.0;
    out.constant = std::exp(ys[0]);
    return out;
  }
  Eigen::MatrixXd A(static_cast<Eigen::Index>(ks.size()), 2);
  Eigen::VectorXd y(static_cast<Eigen::Index>(ks.size()));
  for (std::size_t i = 0; i < ks.size(); ++i) {
    A(static_cast<Eigen::Index>(i), 0) = ks[i];
    A(static_cast<Eigen::Index>(i), 1) = 1.0;
    y[static_cast<Eigen::Index>(i)] = ys[i];
  }
  const Eigen::Vector2d sol = A.colPivHouseholderQr().solve(y);
  out.rate = std::exp(sol[0]);
  out.constant = std::exp(sol[1]);
  const double ss_res = (A * sol - y).squaredNorm();
  const double mean = y.mean();
  const double ss_tot = (y.array() - mean).matrix().squaredNorm();
  out.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
  return out;
}

}  // namespace renormlab
