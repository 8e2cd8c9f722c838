#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "renormlab/affine.hpp"
#include "renormlab/scalar.hpp"

namespace renormlab {

template <class S>
struct MultimodalMap;

// f(x) = sum_k c[k] * x^(2k); even by construction.
template <class S>
struct EvenPoly {
  std::vector<S> c;
};

// out o (factor chain of `count` base steps starting at start_fiber) o in.
// in.offset == 0, so the segment is even whenever the base factors are; public
// evaluation goes through |x| which makes evenness exact.
template <class S>
struct IterateSegment {
  std::shared_ptr<const MultimodalMap<S>> base;
  int start_fiber = 0;
  std::int64_t count = 0;
  Affine<S> in;
  Affine<S> out;
};

template <class S>
struct UnimodalFactor {
  std::variant<EvenPoly<S>, IterateSegment<S>> impl;

  bool is_polynomial() const { return impl.index() == 0; }
  const EvenPoly<S>& poly() const { return std::get<0>(impl); }
  const IterateSegment<S>& segment() const { return std::get<1>(impl); }
};

// f = f_{n_type-1} o ... o f_0 on [-1,1]; factor j acts fiber j -> j+1 (mod n).
template <class S>
struct MultimodalMap {
  int n_type = 1;
  std::vector<UnimodalFactor<S>> factors;
  int precision = precision_bits<S>();
};

template <class S>
struct FiberPoint {
  S x{};
  int fiber = 0;
};

// ---------------------------------------------------------------------------
// Evaluation

template <class S>
Jet<S> eval_jet(const EvenPoly<S>& p, const Jet<S>& x) {
  const S u = x.v * x.v;
  S g(0), g1(0), g2h(0);  // g, g', g''/2 in the variable u
  for (std::size_t i = p.c.size(); i-- > 0;) {
    g2h = g2h * u + g1;
    g1 = g1 * u + g;
    g = g * u + p.c[i];
  }
  const S fx = g;
  const S f1 = S(2) * x.v * g1;                          // df/dx
  const S f2 = S(2) * g1 + S(8) * u * g2h;               // d2f/dx2
  return Jet<S>{fx, f1 * x.d1, f2 * x.d1 * x.d1 + f1 * x.d2};
}

template <class S>
Jet<S> raw_eval_jet(const UnimodalFactor<S>& f, const Jet<S>& x);

template <class S>
Jet<S> raw_eval_jet(const IterateSegment<S>& seg, const Jet<S>& x) {
  Jet<S> j = seg.in(x);
  const auto& base = *seg.base;
  int fiber = seg.start_fiber;
  for (std::int64_t t = 0; t < seg.count; ++t) {
    j = raw_eval_jet(base.factors[fiber], j);
    fiber = (fiber + 1) % base.n_type;
  }
  return seg.out(j);
}

template <class S>
Jet<S> raw_eval_jet(const UnimodalFactor<S>& f, const Jet<S>& x) {
  if (f.is_polynomial()) return eval_jet(f.poly(), x);
  return raw_eval_jet(f.segment(), x);
}

// Symmetrized evaluation: g(|x|) with the derivative sign restored. Exact
// evenness for towers, identical to raw evaluation for polynomials.
template <class S>
Jet<S> eval_jet(const UnimodalFactor<S>& f, const Jet<S>& x) {
  if (f.is_polynomial()) return eval_jet(f.poly(), x);
  if (x.v < S(0)) {
    Jet<S> r = raw_eval_jet(f.segment(), Jet<S>{-x.v, -x.d1, -x.d2});
    return r;
  }
  return raw_eval_jet(f.segment(), x);
}

template <class S>
S eval(const UnimodalFactor<S>& f, S x) {
  return eval_jet(f, Jet<S>{x, S(0), S(0)}).v;
}

template <class S>
Jet<S> eval_jet(const MultimodalMap<S>& m, Jet<S> x) {
  for (const auto& f : m.factors) x = eval_jet(f, x);
  return x;
}

template <class S>
S eval(const MultimodalMap<S>& m, S x) {
  return eval_jet(m, Jet<S>{x, S(0), S(0)}).v;
}

// Cost of one factor evaluation measured in polynomial-factor applications.
template <class S>
std::int64_t eval_cost(const MultimodalMap<S>& m);

template <class S>
std::int64_t eval_cost(const UnimodalFactor<S>& f) {
  if (f.is_polynomial()) return 1;
  const auto& seg = f.segment();
  const auto& base = *seg.base;
  std::int64_t per_step = 0;
  for (const auto& bf : base.factors) per_step += eval_cost(bf);
  return seg.count * std::max<std::int64_t>(1, per_step / base.n_type);
}

template <class S>
std::int64_t eval_cost(const MultimodalMap<S>& m) {
  std::int64_t c = 0;
  for (const auto& f : m.factors) c += eval_cost(f);
  return c;
}

// ---------------------------------------------------------------------------
// Construction

// Factor x |-> b x^2 - b - 1 for each entry of b; requires b_j in [-2,-1].
template <class S>
MultimodalMap<S> build_quadratic_family(const std::vector<S>& b) {
  if (b.empty()) throw domain_error("quadratic family: empty parameter vector");
  MultimodalMap<S> m;
  m.n_type = static_cast<int>(b.size());
  for (const S& bj : b) {
    if (!(bj >= S(-2) && bj <= S(-1)))
      throw domain_error("quadratic family: parameter outside [-2,-1]");
    m.factors.push_back(UnimodalFactor<S>{EvenPoly<S>{{-bj - S(1), bj}}});
  }
  return m;
}

// Orbit of the critical point (0, j) under the extended map, `length` points
// including the start.
template <class S>
std::vector<FiberPoint<S>> critical_orbit(const MultimodalMap<S>& m, int j,
                                          std::int64_t length) {
  std::vector<FiberPoint<S>> orbit;
  orbit.reserve(static_cast<std::size_t>(length));
  FiberPoint<S> p{S(0), j};
  for (std::int64_t t = 0; t < length; ++t) {
    orbit.push_back(p);
    p = FiberPoint<S>{eval(m.factors[p.fiber], p.x), (p.fiber + 1) % m.n_type};
    using std::abs;
    if (abs(p.x) > S(1) + S(1e-6))
      throw domain_error("critical orbit escaped [-1,1]");
  }
  return orbit;
}

// ---------------------------------------------------------------------------
// Validation

struct ValidationCheck {
  std::string name;
  int factor = -1;  // -1: composite-level check
  bool pass = false;
  double measure = 0.0;
};

struct ValidationReport {
  bool ok = true;
  std::vector<ValidationCheck> checks;

  void add(std::string name, int factor, bool pass, double measure) {
    ok = ok && pass;
    checks.push_back({std::move(name), factor, pass, measure});
  }
};

template <class S>
S validation_tol(const UnimodalFactor<S>& f, double scale) {
  const double cost = static_cast<double>(eval_cost(f));
  return S(scale * std::max(1.0, cost)) * machine_eps<S>();
}

// Checks, per factor: fixes -1, even, critical value >= 0, strictly concave at
// 0, range inside [-1,1]; plus the composite fixing -1.
template <class S>
ValidationReport validate(const MultimodalMap<S>& m, double tol_scale = 1e5,
                          int samples = 129) {
  using std::abs;
  ValidationReport rep;
  if (m.n_type < 1 || static_cast<int>(m.factors.size()) != m.n_type) {
    rep.add("factor_count_matches_type", -1, false,
            static_cast<double>(m.factors.size()));
    return rep;
  }
  for (int j = 0; j < m.n_type; ++j) {
    const auto& f = m.factors[j];
    const S tol = validation_tol(f, tol_scale);

    const S at_minus1 = eval(f, S(-1));
    rep.add("fixes_minus_one", j, abs(at_minus1 + S(1)) <= tol,
            to_double(abs(at_minus1 + S(1))));

    S even_dev(0);
    if (!f.is_polynomial()) {
      for (int i = 1; i < samples; ++i) {
        const S x = S(i) / S(samples);
        const S d = abs(raw_eval_jet(f, jet_var(x)).v -
                        raw_eval_jet(f, jet_var(-x)).v);
        if (d > even_dev) even_dev = d;
      }
    }
    rep.add("even", j, even_dev <= tol, to_double(even_dev));

    const Jet<S> at0 = eval_jet(f, jet_var(S(0)));
    rep.add("nonneg_critical_value", j, at0.v >= -tol, to_double(at0.v));
    rep.add("concave_at_zero", j, at0.d2 < S(0), to_double(at0.d2));

    S range_excess(0);
    for (int i = 0; i <= samples; ++i) {
      const S x = S(-1) + S(2) * S(i) / S(samples);
      const S v = abs(eval(f, x));
      if (v - S(1) > range_excess) range_excess = v - S(1);
    }
    rep.add("range_in_interval", j, range_excess <= tol,
            to_double(range_excess));
  }
  const S comp = eval(m, S(-1));
  const S ctol = validation_tol(m.factors[0], tol_scale) * S(m.n_type);
  rep.add("composite_fixes_minus_one", -1, abs(comp + S(1)) <= ctol,
          to_double(abs(comp + S(1))));
  return rep;
}

}  // namespace renormlab
