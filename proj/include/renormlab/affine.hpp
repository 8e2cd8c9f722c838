#pragma once

#include "renormlab/scalar.hpp"

namespace renormlab {

// Value and first two derivatives of a curve x(t), propagated by composition.
template <class S>
struct Jet {
  S v{};
  S d1{};
  S d2{};
};

template <class S>
Jet<S> jet_var(S x) {
  return Jet<S>{x, S(1), S(0)};
}

// x |-> scale * x + offset
template <class S>
struct Affine {
  S scale{1};
  S offset{0};

  S operator()(S x) const { return scale * x + offset; }

  Jet<S> operator()(Jet<S> j) const {
    return Jet<S>{scale * j.v + offset, scale * j.d1, scale * j.d2};
  }

  Affine inverse() const { return Affine{S(1) / scale, -offset / scale}; }

  // (a.then(b))(x) == b(a(x))
  Affine then(const Affine& b) const {
    return Affine{b.scale * scale, b.scale * offset + b.offset};
  }
};

}  // namespace renormlab
