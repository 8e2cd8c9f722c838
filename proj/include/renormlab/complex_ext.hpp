#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "renormlab/map_core.hpp"
#include "renormlab/scalar.hpp"

// Complex-plane side of the laboratory: filled-Julia escape rasters, the
// external circle map recovered from the escaping Boettcher coordinate,
// polynomial-like domain candidates around tower levels, and round-annulus
// modulus bounds.  Everything here runs in double precision; the quantities
// of interest (escape counts, angle deviations, annulus radii) are far from
// the double roundoff floor.

namespace renormlab {

using Cplx = std::complex<double>;

// The composite map expanded into monomial coefficients.  `b` keeps the
// factor parameters in composition order (first factor applied first); the
// expansion has degree exactly 2^N with real coefficients because every
// factor is an even real quadratic.
struct ComplexPolynomial {
  std::vector<double> b;
  std::vector<double> coeffs;  // ascending powers, coeffs.size() == 2^N + 1
};

inline int degree(const ComplexPolynomial& p) {
  return static_cast<int>(p.coeffs.size()) - 1;
}

inline ComplexPolynomial composite_polynomial(const std::vector<double>& b) {
  if (b.empty()) throw domain_error("complex: empty parameter vector");
  // Start from the identity and push each factor x |-> b x^2 - b - 1 through
  // by polynomial squaring.  Degrees stay tiny (2^N), so convolution is exact
  // enough in double for every use below.
  std::vector<double> c{0.0, 1.0};
  for (double bj : b) {
    std::vector<double> sq(2 * c.size() - 1, 0.0);
    for (std::size_t i = 0; i < c.size(); ++i)
      for (std::size_t j = 0; j < c.size(); ++j) sq[i + j] += c[i] * c[j];
    for (double& v : sq) v *= bj;
    sq[0] -= bj + 1.0;
    c = std::move(sq);
  }
  return ComplexPolynomial{b, std::move(c)};
}

inline Cplx eval(const ComplexPolynomial& p, Cplx z) {
  Cplx acc{0.0, 0.0};
  for (std::size_t i = p.coeffs.size(); i-- > 0;) acc = acc * z + p.coeffs[i];
  return acc;
}

// Radius beyond which one application strictly increases the modulus for the
// composite families handled here (leading coefficient has modulus >= 1), so
// escape, once detected, is permanent.
inline double escape_bound(const ComplexPolynomial& p) {
  double m = 0.0;
  for (double c : p.coeffs) m = std::max(m, std::abs(c));
  return 2.0 * (1.0 + m);
}

struct RasterGrid {
  Cplx center{0.0, 0.0};
  double width = 3.0;
  double height = 3.0;
  int nx = 0;
  int ny = 0;
  double escape_radius = 0.0;  // 0 means: use escape_bound of the map
  int max_iter = 64;
};

struct JuliaRaster {
  int nx = 0;
  int ny = 0;
  std::vector<int> escape;  // row-major, ny rows of nx; -1 marks non-escaped
};

// First iterate count whose image leaves the radius, or -1 within max_iter.
inline int escape_time(const ComplexPolynomial& p, Cplx z, double radius,
                       int max_iter) {
  for (int k = 1; k <= max_iter; ++k) {
    z = eval(p, z);
    if (std::abs(z) > radius) return k;
  }
  return -1;
}

inline JuliaRaster julia_raster(const ComplexPolynomial& p,
                                const RasterGrid& g) {
  if (g.nx <= 0 || g.ny <= 0) return JuliaRaster{};
  if (!(g.width > 0.0) || !(g.height > 0.0) || g.max_iter < 1)
    throw domain_error("raster: invalid grid");
  const double bound = escape_bound(p);
  double radius = g.escape_radius;
  if (radius == 0.0) {
    radius = bound;
  } else if (radius < bound) {
    throw domain_error("raster: escape radius below the monotone-escape bound");
  }
  JuliaRaster out;
  out.nx = g.nx;
  out.ny = g.ny;
  out.escape.resize(static_cast<std::size_t>(g.nx) * g.ny);
  for (int j = 0; j < g.ny; ++j) {
    const double y =
        g.center.imag() + ((j + 0.5) / g.ny - 0.5) * g.height;
    for (int i = 0; i < g.nx; ++i) {
      const double x =
          g.center.real() + ((i + 0.5) / g.nx - 0.5) * g.width;
      out.escape[static_cast<std::size_t>(j) * g.nx + i] =
          escape_time(p, Cplx(x, y), radius, g.max_iter);
    }
  }
  return out;
}

struct ExternalSamples {
  std::vector<std::pair<double, double>> samples;  // (theta_in, theta_out)
  int winding = 0;
};

namespace detail {

// All complex solutions of (f_{j-1} o ... o f_0)(z) = w, by backward square
// roots; each factor inverts as z = +-sqrt((w + b + 1)/b).
inline std::vector<Cplx> prefix_preimages(const std::vector<double>& b, int j,
                                          Cplx w) {
  std::vector<Cplx> cur{w};
  for (int i = j - 1; i >= 0; --i) {
    std::vector<Cplx> nxt;
    nxt.reserve(2 * cur.size());
    for (Cplx v : cur) {
      const Cplx s = std::sqrt((v + b[i] + 1.0) / b[i]);
      nxt.push_back(s);
      nxt.push_back(-s);
    }
    cur = std::move(nxt);
  }
  return cur;
}

// Critical points of the composite: the origin plus every pullback of the
// deeper folds, 2^N - 1 points in total.
inline std::vector<Cplx> critical_points(const ComplexPolynomial& p) {
  std::vector<Cplx> out{Cplx(0.0, 0.0)};
  for (int j = 1; j < static_cast<int>(p.b.size()); ++j)
    for (Cplx z : prefix_preimages(p.b, j, Cplx(0.0, 0.0))) out.push_back(z);
  return out;
}

// Angle (in turns, [0,1)) of the Boettcher coordinate at z, assuming |z| is
// large enough that every orbit ratio P(z_n)/(a z_n^d) stays within the
// principal branch.  The normalizing constant a^{1/(d-1)} contributes a fixed
// rotation, included so that angle(P(z)) == d * angle(z) mod 1 exactly.
inline double boettcher_angle(const ComplexPolynomial& p, Cplx z) {
  const int d = degree(p);
  const double a = p.coeffs.back();
  constexpr double tau = 6.283185307179586476925286766559;
  double theta = std::arg(z) / tau;
  if (a < 0.0) theta += 0.5 / (d - 1);
  double scale = 1.0;
  Cplx zn = z;
  for (int n = 0; n < 64; ++n) {
    scale /= d;
    // P(zn)/(a zn^d) = 1 + tail/a with tail = sum_{i<d} c_i w^{d-i}, w = 1/zn
    const Cplx w = 1.0 / zn;
    Cplx tail{0.0, 0.0};
    for (int i = 0; i < d; ++i) tail = (tail + p.coeffs[i]) * w;
    const Cplx ratio = 1.0 + tail / a;
    theta += std::arg(ratio) / tau * scale;
    if (std::abs(tail / a) < 1e-17 || std::abs(zn) > 1e50) break;
    zn = eval(p, zn);
  }
  theta -= std::floor(theta);
  if (theta >= 1.0) theta = 0.0;
  return theta;
}

// Winding of a circle-valued sequence over one closed sweep, by nearest-lift
// unwrapping of consecutive差 differences.
inline double lift_total(const std::vector<double>& th) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 <= th.size(); ++i) {
    const double a = th[i];
    const double b = th[(i + 1) % th.size()];
    double d = b - a;
    d -= std::round(d);
    total += d;
    if (i + 1 == th.size()) break;
  }
  return total;
}

}  // namespace detail

// Samples the circle map induced at infinity.  Points are taken on a circle
// far enough out that the Boettcher branch is unambiguous; theta_out is the
// coordinate angle of the image point.  Requires a connected filled Julia
// set, certified by iterating every critical point up to a horizon.
inline ExternalSamples external_map_samples(const ComplexPolynomial& p,
                                            int count) {
  const int d = degree(p);
  if (d < 2) throw domain_error("external: degree below two");
  if (count < 8 * d) throw domain_error("external: too few samples");
  const double bound = escape_bound(p);
  for (Cplx c : detail::critical_points(p)) {
    Cplx z = c;
    for (int i = 0; i < 256; ++i) {
      z = eval(p, z);
      if (std::abs(z) > bound)
        throw domain_error(
            "external: disconnected julia set (a critical orbit escapes)");
    }
  }
  double csum = 0.0;
  for (double c : p.coeffs) csum += std::abs(c);
  const double radius =
      std::max({4.0, bound, 2.0 * csum / std::abs(p.coeffs.back())});
  constexpr double tau = 6.283185307179586476925286766559;
  ExternalSamples out;
  out.samples.reserve(static_cast<std::size_t>(count));
  std::vector<double> thout(static_cast<std::size_t>(count));
  std::vector<double> thin(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double psi = static_cast<double>(i) / count;
    const Cplx z = radius * Cplx(std::cos(tau * psi), std::sin(tau * psi));
    const double ti = detail::boettcher_angle(p, z);
    const double to = detail::boettcher_angle(p, eval(p, z));
    thin[static_cast<std::size_t>(i)] = ti;
    thout[static_cast<std::size_t>(i)] = to;
    out.samples.emplace_back(ti, to);
  }
  for (int i = 0; i < count; ++i) {
    double step = thin[static_cast<std::size_t>((i + 1) % count)] -
                  thin[static_cast<std::size_t>(i)];
    step -= std::round(step);
    if (step <= 0.0)
      throw domain_error("external: input lift is not strictly increasing");
  }
  const double win = detail::lift_total(thin);
  if (std::llround(win) != 1)
    throw domain_error("external: sample circle does not embed");
  out.winding = static_cast<int>(std::llround(detail::lift_total(thout)));
  return out;
}

// Search controls for polynomial-like domain candidates.  The outer curve V
// ranges over ellipses centered at the origin whose semi-axes sweep a
// geometric grid; the inner curve U is grown from V by boundary continuation
// of the preimage component containing the origin.
struct PolylikeSearch {
  double axis_lo = 1.05;
  double axis_hi = 4.0;
  int axis_steps = 16;
  int boundary_samples = 256;
  double margin = 1e-6;  // strictness of the compact containment check
  int newton_iters = 30;
};

struct PolylikeDomains {
  bool found = false;
  double semi_a = 0.0;  // V semi-axis along the real direction
  double semi_b = 0.0;  // V semi-axis along the imaginary direction
  std::vector<Cplx> boundary_v;
  std::vector<Cplx> boundary_u;
  int degree = 0;
  std::string note;
};

struct AnnulusBound {
  double inner_radius = 0.0;
  double outer_radius = 0.0;
  double bound = 0.0;
  bool unbounded = false;
  std::string note;
};

// Round-annulus estimate: if U fits in the disk of radius r1 and V contains
// the disk of radius r2, the annulus between them has modulus at least
// log(r2/r1) / 2 pi.  Degenerate radii give the zero bound, not an error.
inline AnnulusBound round_annulus_bound(double r1, double r2) {
  AnnulusBound out;
  out.inner_radius = r1;
  out.outer_radius = r2;
  if (!(r1 > 0.0) || r2 <= r1) {
    out.bound = 0.0;
    out.note = "degenerate radii: outer disk does not clear the inner hull";
    return out;
  }
  constexpr double tau = 6.283185307179586476925286766559;
  out.bound = std::log(r2 / r1) / tau;
  return out;
}

namespace detail {

struct CJet {
  Cplx v;
  Cplx d;
};

template <class S>
CJet complex_jet(const UnimodalFactor<S>& f, Cplx z);

// Chain every factor of the map once, with the complex derivative.
template <class S>
CJet complex_jet(const MultimodalMap<S>& m, Cplx z) {
  CJet j{z, Cplx(1.0, 0.0)};
  for (const auto& f : m.factors) {
    const CJet step = complex_jet(f, j.v);
    j.v = step.v;
    j.d = step.d * j.d;
  }
  return j;
}

template <class S>
CJet complex_jet(const UnimodalFactor<S>& f, Cplx z) {
  if (f.is_polynomial()) {
    const auto& poly = std::get<EvenPoly<S>>(f.impl);
    // Horner in u = z^2; the factor is exactly even as a polynomial, so no
    // symmetrization is needed off the real axis.
    const Cplx u = z * z;
    Cplx val{0.0, 0.0};
    Cplx dval{0.0, 0.0};
    for (std::size_t i = poly.c.size(); i-- > 0;) {
      dval = dval * u + val;
      val = val * u + to_double(poly.c[i]);
    }
    return CJet{val, 2.0 * z * dval};
  }
  const auto& seg = std::get<IterateSegment<S>>(f.impl);
  CJet j{to_double(seg.in.scale) * z + to_double(seg.in.offset),
         Cplx(to_double(seg.in.scale), 0.0)};
  int fiber = seg.start_fiber;
  const int n = seg.base->n_type;
  for (std::int64_t s = 0; s < seg.count; ++s) {
    const CJet step =
        complex_jet(seg.base->factors[static_cast<std::size_t>(fiber)], j.v);
    j.v = step.v;
    j.d = step.d * j.d;
    fiber = (fiber + 1) % n;
  }
  j.v = to_double(seg.out.scale) * j.v + to_double(seg.out.offset);
  j.d *= to_double(seg.out.scale);
  return j;
}

inline bool finite_jet(const CJet& j) {
  return std::isfinite(j.v.real()) && std::isfinite(j.v.imag()) &&
         std::isfinite(j.d.real()) && std::isfinite(j.d.imag());
}

// Newton solve of h(z) = w from a given seed; empty on stagnation or escape.
// Deep iterate stacks overflow double range outside the bounded region, so an
// overshooting step is halved until the jet is finite again.
template <class S>
std::optional<Cplx> newton_preimage(const MultimodalMap<S>& h, Cplx w, Cplx z,
                                    int iters) {
  CJet j = complex_jet(h, z);
  if (!finite_jet(j)) return std::nullopt;
  Cplx best_z = z;
  double best_r = std::abs(j.v - w);
  for (int k = 0; k < iters; ++k) {
    if (std::abs(j.d) < 1e-13) break;
    Cplx step = (j.v - w) / j.d;
    Cplx znew = z - step;
    CJet jnew = complex_jet(h, znew);
    for (int half = 0; half < 24 && !finite_jet(jnew); ++half) {
      step *= 0.5;
      znew = z - step;
      jnew = complex_jet(h, znew);
    }
    if (!finite_jet(jnew)) break;
    z = znew;
    j = jnew;
    const double res = std::abs(j.v - w);
    if (res < best_r) {
      best_r = res;
      best_z = z;
    }
    if (std::abs(z) > 50.0) return std::nullopt;
    if (std::abs(step) < 1e-12) return z;
  }
  // Deep stacks stall on a rounding-noise plateau before the step criterion
  // fires; a small value-space residual is still a solved preimage.
  if (best_r < 1e-8) return best_z;
  return std::nullopt;
}

struct PolylikeCandidate {
  double semi_a = 0.0;
  double semi_b = 0.0;
  std::vector<Cplx> bv;
  std::vector<Cplx> bu;
  int deg = 0;
  double r1 = 0.0;  // max |z| over the inner boundary
};

// Attempt one ellipse: continue the preimage boundary of the component
// containing the origin around V until it closes; the number of sweeps of V
// needed to close is the covering degree.  Fails (with a note) on lost
// continuation, wrong component, wrong degree, or broken containment.
template <class S>
std::optional<PolylikeCandidate> try_polylike(const MultimodalMap<S>& h,
                                              double A, double B,
                                              const PolylikeSearch& ps,
                                              std::string* note) {
  constexpr double tau = 6.283185307179586476925286766559;
  const int d_expect = 1 << h.n_type;
  const int M = ps.boundary_samples;
  // Sweep starts at the left vertex (-A, 0): the normalized maps fix -1 and
  // fall to -infinity outside the interval, so only the negative real target
  // has real-axis preimages to seed from.
  auto vpoint = [&](double t) {
    return Cplx(A * std::cos(tau * (t + 0.5)), B * std::sin(tau * (t + 0.5)));
  };

  // Seeds for the starting preimage of v(0).  Real seeds first: the curve
  // crosses the real axis just beyond the invariant interval, where deep
  // iterate stacks stay bounded.  A ring sweep follows, since different
  // converged seeds can land on different preimage components; each one gets
  // a full continuation attempt until a curve encircling the origin shows up.
  std::vector<Cplx> starts;
  auto try_seed = [&](Cplx s0) {
    if (auto z = newton_preimage(h, vpoint(0.0), s0, ps.newton_iters)) {
      bool dup = false;
      for (Cplx s : starts)
        if (std::abs(s - *z) < 1e-9) dup = true;
      if (!dup) starts.push_back(*z);
    }
  };
  for (double r : {1.02, 1.1, 1.25, 1.45, 1.7, 2.0}) {
    try_seed(Cplx(r, 0.0));
    try_seed(Cplx(-r, 0.0));
  }
  for (double r : {1.05, 1.25, 1.6, 2.2, 3.0})
    for (int q = 0; q < 8; ++q) {
      const double ang = tau * (q + 0.37) / 8.0;
      try_seed(r * Cplx(std::cos(ang), std::sin(ang)));
    }
  if (starts.empty()) {
    if (note) *note = "boundary-continuation-failure: no starting preimage";
    return std::nullopt;
  }

  for (Cplx z0 : starts) {
    std::vector<Cplx> bu{z0};
    Cplx z = z0;
    int loops = 0;
    bool closed = false;
    bool lost = false;
    // Adaptive parameter steps: the curve passes near critical points of the
    // full composition, where a fixed stride makes Newton hop between
    // preimage sheets.  Halve the stride on a failed or jumping step, grow it
    // back on success, and check closure at each completed sweep.
    double t = 0.0;
    double dt = 1.0 / M;
    double next_turn = 1.0;
    while (!closed && !lost && loops < d_expect + 1) {
      const double step = std::min(dt, next_turn - t);
      const double t2 = t + step;
      const auto nx = newton_preimage(h, vpoint(t2), z, ps.newton_iters);
      if (nx && std::abs(*nx - z) <= 0.25) {
        t = t2;
        z = *nx;
        if (next_turn - t < 1e-12) {
          ++loops;
          next_turn += 1.0;
          // Preimage sheets sit far apart (~1e-2), so a loose closure
          // tolerance stays unambiguous while tolerating deep-stack noise.
          if (std::abs(z - z0) < 1e-6) {
            closed = true;
            break;
          }
        }
        bu.push_back(z);
        dt = std::min(dt * 1.5, 1.0 / M);
      } else {
        dt *= 0.5;
        if (dt < 1.0 / (static_cast<double>(M) * 65536.0)) lost = true;
      }
    }
    if (lost) {
      if (note) *note = "boundary-continuation-failure: lost the curve";
      continue;
    }
    if (!closed) {
      if (note) *note = "continuation does not close at the expected degree";
      continue;
    }
    // Identify the component: the inner boundary must encircle the origin.
    std::vector<double> args(bu.size());
    for (std::size_t i = 0; i < bu.size(); ++i) args[i] = std::arg(bu[i]) / tau;
    const long wind0 = std::llround(lift_total(args));
    if (wind0 == 0) continue;  // one-sided component, try another seed
    if (std::llabs(wind0) != 1) {
      if (note) *note = "inner boundary is not a simple curve";
      continue;
    }
    if (loops != d_expect) {
      if (note) *note = "argument-principle degree mismatch";
      continue;
    }
    // Compact containment: every inner boundary point strictly inside V.
    double r1 = 0.0;
    bool inside = true;
    for (Cplx u : bu) {
      const double q = (u.real() / A) * (u.real() / A) +
                       (u.imag() / B) * (u.imag() / B);
      if (q >= 1.0 - ps.margin) {
        inside = false;
        break;
      }
      r1 = std::max(r1, std::abs(u));
    }
    if (!inside) {
      if (note) *note = "inner domain touches the outer boundary";
      continue;
    }
    PolylikeCandidate cand;
    cand.semi_a = A;
    cand.semi_b = B;
    cand.bu = std::move(bu);
    cand.deg = d_expect;
    cand.r1 = r1;
    cand.bv.reserve(static_cast<std::size_t>(M));
    for (int i = 0; i < M; ++i)
      cand.bv.push_back(vpoint(static_cast<double>(i) / M));
    return cand;
  }
  return std::nullopt;
}

template <class S>
std::vector<double> axis_grid(const PolylikeSearch& ps) {
  std::vector<double> g;
  const double lo = ps.axis_lo;
  const double hi = ps.axis_hi;
  if (!(lo > 1.0) || hi < lo || ps.axis_steps < 1)
    throw domain_error("polylike: malformed axis grid");
  if (ps.axis_steps == 1) return {lo};
  const double ratio = std::pow(hi / lo, 1.0 / (ps.axis_steps - 1));
  double v = lo;
  for (int i = 0; i < ps.axis_steps; ++i) {
    g.push_back(v);
    v *= ratio;
  }
  return g;
}

}  // namespace detail

// First ellipse in the grid admitting a certified polynomial-like restriction
// h : U -> V of full degree.  When nothing in the budget works, the result
// carries found == false and the most recent failure note.
template <class S>
PolylikeDomains polylike_domains(const MultimodalMap<S>& h,
                                 const PolylikeSearch& ps = PolylikeSearch{}) {
  const std::vector<double> grid = detail::axis_grid<S>(ps);
  std::string note = "no candidate admitted a certified restriction";
  for (double A : grid)
    for (double B : grid) {
      std::string local;
      if (auto cand = detail::try_polylike(h, A, B, ps, &local)) {
        PolylikeDomains out;
        out.found = true;
        out.semi_a = cand->semi_a;
        out.semi_b = cand->semi_b;
        out.boundary_v = std::move(cand->bv);
        out.boundary_u = std::move(cand->bu);
        out.degree = cand->deg;
        return out;
      }
      if (!local.empty()) note = local;
    }
  PolylikeDomains out;
  out.note = "not-found: " + note;
  return out;
}

// A plain polynomial acts on the whole plane, so no annulus separates its
// domain from its range: the modulus is unbounded.
inline AnnulusBound modulus_lower_bound(const ComplexPolynomial&) {
  AnnulusBound out;
  out.unbounded = true;
  out.note = "unbounded";
  return out;
}

// Best round-annulus bound over every certified candidate in the search
// grid.  Scanning the full grid (rather than stopping at the first success)
// makes the bound monotone under enlarging the search box.
template <class S>
AnnulusBound modulus_lower_bound(const MultimodalMap<S>& h,
                                 const PolylikeSearch& ps = PolylikeSearch{}) {
  const std::vector<double> grid = detail::axis_grid<S>(ps);
  bool any = false;
  AnnulusBound best;
  for (double A : grid)
    for (double B : grid) {
      std::string local;
      const auto cand = detail::try_polylike(h, A, B, ps, &local);
      if (!cand) continue;
      const AnnulusBound ab =
          round_annulus_bound(cand->r1, std::min(A, B));
      if (!any || ab.bound > best.bound) best = ab;
      any = true;
    }
  if (!any) throw domain_error("modulus: domains not found");
  return best;
}

}  // namespace renormlab
