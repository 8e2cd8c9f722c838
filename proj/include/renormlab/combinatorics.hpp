#pragma once

// Order data of periodic-interval cycles: which fiber each interval lives on,
// how the intervals of one fiber are ordered, which ones contain a critical
// point, and how the dynamics permutes them.  Two cycles with the same data
// are interchangeable for word bookkeeping, so everything here is pure
// integer combinatorics; geometry enters only through extract().

#include <stdexcept>
#include <string>
#include <vector>

#include "renormlab/renorm.hpp"

namespace renormlab {

// Labels are 0..n*m-1.  fiber/pos/pi/is_critical are per-label arrays; pos
// ranks a label inside its fiber's left-to-right order.  marked is the
// distinguished label: critical, on fiber 0, the cycle start.
struct CombinatorialData {
  int n_type = 1;
  int m = 0;
  std::vector<int> fiber;
  std::vector<int> pos;
  std::vector<int> pi;
  std::vector<char> is_critical;
  int marked = 0;
};

// A validated word in canonical encoding.  text is the complete invariant:
// two cycles carry the same word exactly when the strings are equal.
struct Combinatorics {
  std::string text;
  int n_type = 0;
  int m = 0;

  friend bool operator==(const Combinatorics& a, const Combinatorics& b) {
    return a.text == b.text;
  }
  friend bool operator!=(const Combinatorics& a, const Combinatorics& b) {
    return !(a == b);
  }
  friend bool operator<(const Combinatorics& a, const Combinatorics& b) {
    return a.text < b.text;
  }
};

// Throws domain_error naming the violated condition.  Enforced shape:
// per-label arrays consistent, pi a bijection advancing fibers by one, one
// critical label per fiber, marked critical on fiber 0, every pi-cycle
// passing a critical label, and the fold order around each critical label:
// the critical image is the top of its fiber, images of labels left of the
// critical keep their order, images of labels right of it reverse theirs.
void validate_data(const CombinatorialData& d);

// True when the whole label set is one pi-cycle.  Extraction and products
// only ever see this case; the data type is broader.
bool single_cycle(const CombinatorialData& d);

// Validates, renames labels canonically (cycle from marked first, remaining
// cycles by their critical label's fiber-major position), and prints
// "v1;N=..;m=..;ord=..;pi=..;crit=..;P=..".  ord lists each fiber's labels
// in order, fibers joined by '|'; pi is the permutation table; crit the
// critical label per fiber.
Combinatorics canonical_form(const CombinatorialData& d);

// Inverse of canonical_form up to renaming.  Any malformed or invalid input
// throws domain_error("parse: invalid canonical combinatorics").
CombinatorialData parse_combinatorics(const std::string& text);

// Word of the two-level interval subdivision: the intervals of `a` are each
// split into the intervals of `b`, slots advancing one `b`-step per critical
// passage.  Slot order inside an `a`-interval follows `b`'s order, flipped
// whenever the identification with the deeper level reverses orientation:
// once at each critical interval (the rescaling x -> -x/z flips), and once
// per backward step through a decreasing branch.  Matches extract() on a
// two-level tower.  Operands must be single-cycle words of the same type.
Combinatorics product(const Combinatorics& a, const Combinatorics& b);

// Splits M into primitive factors, coarsest level first, so that the left
// fold of product() over the result returns M.  Primitive words come back
// as a singleton.  Throws when m exceeds m_cap.
std::vector<Combinatorics> factorize(const Combinatorics& M, int m_cap = 64);

bool is_primitive(const Combinatorics& M, int m_cap = 64);

// All valid words with the given type and intervals per fiber, sorted by
// canonical text.  Supports n_type 1 and 2.
std::vector<Combinatorics> enumerate_combinatorics(int n_type, int m);

// The period-two word: two intervals on one fiber, critical on the left.
Combinatorics doubling_combinatorics();

// ---------------------------------------------------------------------------
// Extraction from geometry

// Reads the order data off a periodic-interval cycle.  Labels are the cycle
// times of the interval orbit; positions come from the actual interval
// order on each fiber.  Throws domain_error("extract: ambiguous
// interval order") if two orbit intervals overlap beyond tol.
template <class S>
CombinatorialData extract(const MultimodalMap<S>& m,
                          const PeriodicInterval<S>& data,
                          S tol = RenormParams<S>::defaults().overlap_tol) {
  const int n = m.n_type;
  const std::int64_t k = data.k;
  const ExtendedMap<S> F{m, S(0), S(0)};

  std::vector<FiberInterval<S>> imgs;
  imgs.reserve(static_cast<std::size_t>(k));
  imgs.push_back(data.J);
  for (std::int64_t t = 1; t < k; ++t) imgs.push_back(image_interval(F, imgs.back()));

  CombinatorialData d;
  d.n_type = n;
  d.m = data.p;
  d.fiber.resize(static_cast<std::size_t>(k));
  d.pos.resize(static_cast<std::size_t>(k));
  d.pi.resize(static_cast<std::size_t>(k));
  d.is_critical.assign(static_cast<std::size_t>(k), 0);
  for (std::int64_t t = 0; t < k; ++t) {
    d.fiber[static_cast<std::size_t>(t)] = static_cast<int>(t % n);
    d.pi[static_cast<std::size_t>(t)] = static_cast<int>((t + 1) % k);
  }
  for (std::int64_t v : data.visit_times)
    d.is_critical[static_cast<std::size_t>(v)] = 1;
  d.marked = 0;

  for (int j = 0; j < n; ++j) {
    std::vector<std::int64_t> times;
    for (std::int64_t t = j; t < k; t += n) times.push_back(t);
    std::sort(times.begin(), times.end(), [&](std::int64_t a, std::int64_t b) {
      return imgs[static_cast<std::size_t>(a)].lo < imgs[static_cast<std::size_t>(b)].lo;
    });
    for (std::size_t r = 0; r + 1 < times.size(); ++r) {
      const auto& lft = imgs[static_cast<std::size_t>(times[r])];
      const auto& rgt = imgs[static_cast<std::size_t>(times[r + 1])];
      if (rgt.lo < lft.hi - tol)
        throw domain_error("extract: ambiguous interval order");
    }
    for (std::size_t r = 0; r < times.size(); ++r)
      d.pos[static_cast<std::size_t>(times[r])] = static_cast<int>(r);
  }

  validate_data(d);
  return d;
}

// Words of a tower, coarsest level first.  Level d is extracted from the
// map it renormalizes: the base map for d = 0, level d-1's return map after.
template <class S>
std::vector<Combinatorics> tower_words(const MultimodalMap<S>& base,
                                       const RenormTower<S>& tower) {
  std::vector<Combinatorics> words;
  const MultimodalMap<S>* cur = &base;
  for (const auto& lvl : tower.levels) {
    words.push_back(canonical_form(extract(*cur, lvl.data)));
    cur = &lvl.map;
  }
  return words;
}

}  // namespace renormlab
