#include "renormlab/combinatorics.hpp"

#include <algorithm>
#include <cstddef>
#include <optional>
#include <sstream>
#include <utility>

namespace renormlab {

namespace {

void fail(const std::string& what) {
  throw domain_error("combinatorics: " + what);
}

int label_count(const CombinatorialData& d) { return d.n_type * d.m; }

// View of single-cycle data by cycle time: time t holds the position and
// criticality of the t-th label after the marked one.  Fibers advance with
// t, so the fiber of time t is t mod n.
struct CycleView {
  int n = 0, m = 0, k = 0;
  std::vector<int> pos;
  std::vector<char> crit;
};

CycleView make_view(const CombinatorialData& d) {
  CycleView v;
  v.n = d.n_type;
  v.m = d.m;
  v.k = label_count(d);
  v.pos.resize(static_cast<std::size_t>(v.k));
  v.crit.resize(static_cast<std::size_t>(v.k));
  int u = d.marked;
  for (int t = 0; t < v.k; ++t) {
    v.pos[static_cast<std::size_t>(t)] = d.pos[static_cast<std::size_t>(u)];
    v.crit[static_cast<std::size_t>(t)] = d.is_critical[static_cast<std::size_t>(u)];
    u = d.pi[static_cast<std::size_t>(u)];
  }
  return v;
}

}  // namespace

void validate_data(const CombinatorialData& d) {
  const int n = d.n_type, m = d.m;
  if (n < 1) fail("type must be positive");
  if (m < 2) fail("needs at least two intervals per fiber");
  const int nm = n * m;
  if (static_cast<int>(d.fiber.size()) != nm ||
      static_cast<int>(d.pos.size()) != nm ||
      static_cast<int>(d.pi.size()) != nm ||
      static_cast<int>(d.is_critical.size()) != nm)
    fail("label arrays must have n*m entries");
  for (int u = 0; u < nm; ++u) {
    if (d.fiber[static_cast<std::size_t>(u)] < 0 ||
        d.fiber[static_cast<std::size_t>(u)] >= n)
      fail("fiber index out of range");
    if (d.pos[static_cast<std::size_t>(u)] < 0 ||
        d.pos[static_cast<std::size_t>(u)] >= m)
      fail("position out of range");
    if (d.pi[static_cast<std::size_t>(u)] < 0 ||
        d.pi[static_cast<std::size_t>(u)] >= nm)
      fail("permutation entry out of range");
  }

  std::vector<char> image_seen(static_cast<std::size_t>(nm), 0);
  for (int u = 0; u < nm; ++u) {
    const int v = d.pi[static_cast<std::size_t>(u)];
    if (image_seen[static_cast<std::size_t>(v)])
      fail("permutation must be a bijection");
    image_seen[static_cast<std::size_t>(v)] = 1;
    if (d.fiber[static_cast<std::size_t>(v)] !=
        (d.fiber[static_cast<std::size_t>(u)] + 1) % n)
      fail("permutation must advance fibers by one");
  }

  std::vector<std::vector<int>> byp(
      static_cast<std::size_t>(n),
      std::vector<int>(static_cast<std::size_t>(m), -1));
  for (int u = 0; u < nm; ++u) {
    int& slot = byp[static_cast<std::size_t>(d.fiber[static_cast<std::size_t>(u)])]
                   [static_cast<std::size_t>(d.pos[static_cast<std::size_t>(u)])];
    if (slot >= 0) fail("positions must rank each fiber");
    slot = u;
  }

  std::vector<int> crit(static_cast<std::size_t>(n), -1);
  for (int u = 0; u < nm; ++u)
    if (d.is_critical[static_cast<std::size_t>(u)]) {
      int& c = crit[static_cast<std::size_t>(d.fiber[static_cast<std::size_t>(u)])];
      if (c >= 0) fail("each fiber needs exactly one critical label");
      c = u;
    }
  for (int j = 0; j < n; ++j)
    if (crit[static_cast<std::size_t>(j)] < 0)
      fail("each fiber needs exactly one critical label");

  if (d.marked < 0 || d.marked >= nm ||
      !d.is_critical[static_cast<std::size_t>(d.marked)] ||
      d.fiber[static_cast<std::size_t>(d.marked)] != 0)
    fail("marked label must be the fiber-0 critical");

  std::vector<char> done(static_cast<std::size_t>(nm), 0);
  for (int u0 = 0; u0 < nm; ++u0) {
    if (done[static_cast<std::size_t>(u0)]) continue;
    bool has_crit = false;
    int u = u0;
    do {
      done[static_cast<std::size_t>(u)] = 1;
      has_crit = has_crit || d.is_critical[static_cast<std::size_t>(u)];
      u = d.pi[static_cast<std::size_t>(u)];
    } while (u != u0);
    if (!has_crit) fail("every cycle must pass a critical label");
  }

  // Fold order: the critical image tops its fiber; images of labels left of
  // the critical keep their order, images of labels right of it reverse it.
  auto ipos = [&](int u) { return d.pos[static_cast<std::size_t>(d.pi[static_cast<std::size_t>(u)])]; };
  for (int j = 0; j < n; ++j) {
    const int c = crit[static_cast<std::size_t>(j)];
    if (ipos(c) != m - 1) fail("critical image must top its fiber");
    const auto& row = byp[static_cast<std::size_t>(j)];
    const int qc = d.pos[static_cast<std::size_t>(c)];
    for (int r1 = 0; r1 < qc; ++r1)
      for (int r2 = r1 + 1; r2 < qc; ++r2)
        if (ipos(row[static_cast<std::size_t>(r1)]) >=
            ipos(row[static_cast<std::size_t>(r2)]))
          fail("images left of the critical must keep their order");
    for (int r1 = qc + 1; r1 < m; ++r1)
      for (int r2 = r1 + 1; r2 < m; ++r2)
        if (ipos(row[static_cast<std::size_t>(r1)]) <=
            ipos(row[static_cast<std::size_t>(r2)]))
          fail("images right of the critical must reverse their order");
  }
}

bool single_cycle(const CombinatorialData& d) {
  const int nm = label_count(d);
  int u = d.marked, count = 0;
  do {
    ++count;
    u = d.pi[static_cast<std::size_t>(u)];
  } while (u != d.marked && count <= nm);
  return count == nm;
}

Combinatorics canonical_form(const CombinatorialData& d) {
  validate_data(d);
  const int n = d.n_type, m = d.m, nm = n * m;

  // Canonical label numbers: walk the marked cycle first, then remaining
  // cycles ordered by their critical label's fiber-major position, each
  // starting at that critical label.
  std::vector<int> order;
  order.reserve(static_cast<std::size_t>(nm));
  std::vector<char> used(static_cast<std::size_t>(nm), 0);
  auto push_cycle = [&](int start) {
    int u = start;
    do {
      order.push_back(u);
      used[static_cast<std::size_t>(u)] = 1;
      u = d.pi[static_cast<std::size_t>(u)];
    } while (u != start);
  };
  push_cycle(d.marked);
  while (static_cast<int>(order.size()) < nm) {
    int best = -1, best_key = 0;
    for (int u = 0; u < nm; ++u) {
      if (used[static_cast<std::size_t>(u)] ||
          !d.is_critical[static_cast<std::size_t>(u)])
        continue;
      const int key = d.fiber[static_cast<std::size_t>(u)] * m +
                      d.pos[static_cast<std::size_t>(u)];
      if (best < 0 || key < best_key) {
        best = u;
        best_key = key;
      }
    }
    if (best < 0) fail("every cycle must pass a critical label");
    push_cycle(best);
  }

  std::vector<int> num(static_cast<std::size_t>(nm), -1);
  for (int t = 0; t < nm; ++t) num[static_cast<std::size_t>(order[static_cast<std::size_t>(t)])] = t;

  std::ostringstream os;
  os << "v1;N=" << n << ";m=" << m << ";ord=";
  for (int j = 0; j < n; ++j) {
    if (j) os << '|';
    std::vector<int> byp(static_cast<std::size_t>(m), -1);
    for (int u = 0; u < nm; ++u)
      if (d.fiber[static_cast<std::size_t>(u)] == j)
        byp[static_cast<std::size_t>(d.pos[static_cast<std::size_t>(u)])] =
            num[static_cast<std::size_t>(u)];
    for (int r = 0; r < m; ++r) {
      if (r) os << ',';
      os << byp[static_cast<std::size_t>(r)];
    }
  }
  os << ";pi=";
  for (int t = 0; t < nm; ++t) {
    if (t) os << ',';
    os << num[static_cast<std::size_t>(
        d.pi[static_cast<std::size_t>(order[static_cast<std::size_t>(t)])])];
  }
  os << ";crit=";
  for (int j = 0; j < n; ++j) {
    if (j) os << ',';
    int cu = -1;
    for (int u = 0; u < nm; ++u)
      if (d.is_critical[static_cast<std::size_t>(u)] &&
          d.fiber[static_cast<std::size_t>(u)] == j)
        cu = u;
    os << num[static_cast<std::size_t>(cu)];
  }
  os << ";P=" << num[static_cast<std::size_t>(d.marked)];
  return Combinatorics{os.str(), n, m};
}

namespace {

int parse_int_strict(const std::string& s) {
  if (s.empty() || s.size() > 6) throw domain_error("bad int");
  long v = 0;
  for (char ch : s) {
    if (ch < '0' || ch > '9') throw domain_error("bad int");
    v = v * 10 + (ch - '0');
  }
  return static_cast<int>(v);
}

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t p = s.find(sep, start);
    if (p == std::string::npos) {
      out.push_back(s.substr(start));
      break;
    }
    out.push_back(s.substr(start, p - start));
    start = p + 1;
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  for (const auto& tok : split_on(s, ',')) out.push_back(parse_int_strict(tok));
  return out;
}

std::string field_after(const std::string& part, const std::string& prefix) {
  if (part.size() < prefix.size() ||
      part.compare(0, prefix.size(), prefix) != 0)
    throw domain_error("bad field");
  return part.substr(prefix.size());
}

}  // namespace

CombinatorialData parse_combinatorics(const std::string& text) {
  try {
    const std::vector<std::string> parts = split_on(text, ';');
    if (parts.size() != 7 || parts[0] != "v1") throw domain_error("bad");
    const int n = parse_int_strict(field_after(parts[1], "N="));
    const int m = parse_int_strict(field_after(parts[2], "m="));
    if (n < 1 || m < 2 || n > 64 || m > 4096 || n * m > 4096)
      throw domain_error("bad");
    const int nm = n * m;
    CombinatorialData d;
    d.n_type = n;
    d.m = m;
    d.fiber.assign(static_cast<std::size_t>(nm), -1);
    d.pos.assign(static_cast<std::size_t>(nm), -1);
    d.pi.assign(static_cast<std::size_t>(nm), -1);
    d.is_critical.assign(static_cast<std::size_t>(nm), 0);

    const std::vector<std::string> fibers =
        split_on(field_after(parts[3], "ord="), '|');
    if (static_cast<int>(fibers.size()) != n) throw domain_error("bad");
    for (int j = 0; j < n; ++j) {
      const std::vector<int> row = parse_int_list(fibers[static_cast<std::size_t>(j)]);
      if (static_cast<int>(row.size()) != m) throw domain_error("bad");
      for (int r = 0; r < m; ++r) {
        const int u = row[static_cast<std::size_t>(r)];
        if (u < 0 || u >= nm || d.fiber[static_cast<std::size_t>(u)] >= 0)
          throw domain_error("bad");
        d.fiber[static_cast<std::size_t>(u)] = j;
        d.pos[static_cast<std::size_t>(u)] = r;
      }
    }

    const std::vector<int> pi = parse_int_list(field_after(parts[4], "pi="));
    if (static_cast<int>(pi.size()) != nm) throw domain_error("bad");
    d.pi = pi;

    const std::vector<int> crit = parse_int_list(field_after(parts[5], "crit="));
    if (static_cast<int>(crit.size()) != n) throw domain_error("bad");
    for (int j = 0; j < n; ++j) {
      const int u = crit[static_cast<std::size_t>(j)];
      if (u < 0 || u >= nm || d.fiber[static_cast<std::size_t>(u)] != j)
        throw domain_error("bad");
      d.is_critical[static_cast<std::size_t>(u)] = 1;
    }

    d.marked = parse_int_strict(field_after(parts[6], "P="));
    if (d.marked < 0 || d.marked >= nm) throw domain_error("bad");

    validate_data(d);
    return d;
  } catch (const std::exception&) {
    throw domain_error("parse: invalid canonical combinatorics");
  }
}

namespace {

enum : int { kSideL = 0, kSideC = 1, kSideR = 2 };

std::vector<int> critical_positions(const CycleView& v) {
  std::vector<int> cp(static_cast<std::size_t>(v.n), -1);
  for (int i = 0; i < v.k; ++i)
    if (v.crit[static_cast<std::size_t>(i)])
      cp[static_cast<std::size_t>(i % v.n)] = v.pos[static_cast<std::size_t>(i)];
  return cp;
}

// Sign of each fiber's boundary rescaling.  The boundary orbit leaves every
// critical interval through the low end of the next one and swaps ends on
// each decreasing interval, so the rescaling is positive exactly when the
// count of decreasing intervals since the previous critical one is odd.
std::vector<char> rescale_positive(const CycleView& v,
                                   const std::vector<int>& critpos) {
  std::vector<char> zp(static_cast<std::size_t>(v.n), 0);
  for (int i = 0; i < v.k; ++i) {
    if (!v.crit[static_cast<std::size_t>(i)]) continue;
    int r = 0;
    int t = (i + v.k - 1) % v.k;
    while (!v.crit[static_cast<std::size_t>(t)]) {
      if (v.pos[static_cast<std::size_t>(t)] > critpos[static_cast<std::size_t>(t % v.n)])
        ++r;
      t = (t + v.k - 1) % v.k;
    }
    zp[static_cast<std::size_t>(i % v.n)] = static_cast<char>(r % 2);
  }
  return zp;
}

}  // namespace

Combinatorics product(const Combinatorics& a, const Combinatorics& b) {
  const CombinatorialData A = parse_combinatorics(a.text);
  const CombinatorialData B = parse_combinatorics(b.text);
  if (A.n_type != B.n_type) throw domain_error("product: type mismatch");
  if (!single_cycle(A) || !single_cycle(B))
    throw domain_error("product: operands must be single-cycle");
  const CycleView va = make_view(A), vb = make_view(B);
  const int n = va.n, k1 = va.k, k2 = vb.k, m2 = vb.m;

  const std::vector<int> critposA = critical_positions(va);
  const std::vector<int> critposB = critical_positions(vb);
  const std::vector<char> zp = rescale_positive(va, critposA);

  // Side of each composite interval relative to its fiber's critical point.
  // Coarse intervals carry their own side; intervals inside a critical one
  // take the deeper side, mirrored when the rescaling is positive.
  const int K = k1 * m2;
  std::vector<int> sym(static_cast<std::size_t>(K), kSideL);
  {
    int s = 0;
    for (int t = 0; t < K; ++t) {
      const int i = t % k1;
      if (!va.crit[static_cast<std::size_t>(i)]) {
        sym[static_cast<std::size_t>(t)] =
            va.pos[static_cast<std::size_t>(i)] < critposA[static_cast<std::size_t>(i % n)]
                ? kSideL
                : kSideR;
        continue;
      }
      if (vb.crit[static_cast<std::size_t>(s)]) {
        sym[static_cast<std::size_t>(t)] = kSideC;
      } else {
        bool left = vb.pos[static_cast<std::size_t>(s)] <
                    critposB[static_cast<std::size_t>(s % n)];
        if (zp[static_cast<std::size_t>(i % n)]) left = !left;
        sym[static_cast<std::size_t>(t)] = left ? kSideL : kSideR;
      }
      s = (s + 1) % k2;
    }
  }

  // Intervals on one fiber sort by their side itineraries: order flips past
  // each decreasing step, and a same-slot pair of distinct critical
  // intervals cannot occur on equal fibers, so comparisons resolve.
  auto before = [&](int t1, int t2) {
    int parity = 0;
    for (int l = 0; l < K; ++l) {
      const int sa = sym[static_cast<std::size_t>((t1 + l) % K)];
      const int sb = sym[static_cast<std::size_t>((t2 + l) % K)];
      if (sa != sb) return parity == 0 ? sa < sb : sb < sa;
      if (sa == kSideR) parity ^= 1;
    }
    throw std::logic_error("product: indistinguishable itineraries");
  };

  CombinatorialData P;
  P.n_type = n;
  P.m = va.m * m2;
  P.fiber.resize(static_cast<std::size_t>(K));
  P.pos.assign(static_cast<std::size_t>(K), -1);
  P.pi.resize(static_cast<std::size_t>(K));
  P.is_critical.assign(static_cast<std::size_t>(K), 0);
  P.marked = 0;
  for (int t = 0; t < K; ++t) {
    P.fiber[static_cast<std::size_t>(t)] = t % n;
    P.pi[static_cast<std::size_t>(t)] = (t + 1) % K;
    P.is_critical[static_cast<std::size_t>(t)] =
        sym[static_cast<std::size_t>(t)] == kSideC;
  }
  for (int j = 0; j < n; ++j) {
    std::vector<int> times;
    times.reserve(static_cast<std::size_t>(K / n));
    for (int t = j; t < K; t += n) times.push_back(t);
    std::sort(times.begin(), times.end(), before);
    for (int r = 0; r < static_cast<int>(times.size()); ++r)
      P.pos[static_cast<std::size_t>(times[static_cast<std::size_t>(r)])] = r;
  }
  return canonical_form(P);
}

namespace {

// One coarsening attempt: collapse runs of m/m1 slots into m1 blocks per
// fiber and read the fine word back out of the critical blocks.  Returns
// the two factors only if their product reproduces the whole word exactly.
std::optional<std::pair<Combinatorics, Combinatorics>> split_once(
    const CycleView& v, const std::string& whole_text, int m1) {
  const int n = v.n, m = v.m, K = v.k;
  const int m2 = m / m1;
  const int k1 = n * m1, k2 = n * m2;

  CombinatorialData A;
  A.n_type = n;
  A.m = m1;
  A.fiber.resize(static_cast<std::size_t>(k1));
  A.pos.resize(static_cast<std::size_t>(k1));
  A.pi.resize(static_cast<std::size_t>(k1));
  A.is_critical.assign(static_cast<std::size_t>(k1), 0);
  A.marked = 0;
  for (int i = 0; i < k1; ++i) {
    int lo = m, hi = -1;
    char crit_any = 0;
    for (int t = i; t < K; t += k1) {
      lo = std::min(lo, v.pos[static_cast<std::size_t>(t)]);
      hi = std::max(hi, v.pos[static_cast<std::size_t>(t)]);
      crit_any = crit_any | v.crit[static_cast<std::size_t>(t)];
    }
    if (hi - lo + 1 != m2 || lo % m2 != 0) return std::nullopt;
    A.fiber[static_cast<std::size_t>(i)] = i % n;
    A.pos[static_cast<std::size_t>(i)] = lo / m2;
    A.pi[static_cast<std::size_t>(i)] = (i + 1) % k1;
    A.is_critical[static_cast<std::size_t>(i)] = crit_any;
  }
  try {
    validate_data(A);
  } catch (const std::exception&) {
    return std::nullopt;
  }

  std::vector<int> sidx(static_cast<std::size_t>(K), 0);
  for (int t = 0, s = 0; t < K; ++t) {
    sidx[static_cast<std::size_t>(t)] = s;
    s = (s + (A.is_critical[static_cast<std::size_t>(t % k1)] ? 1 : 0)) % k2;
  }

  const CycleView vca{n, m1, k1, A.pos, A.is_critical};
  const std::vector<char> zp = rescale_positive(vca, critical_positions(vca));

  CombinatorialData B;
  B.n_type = n;
  B.m = m2;
  B.fiber.resize(static_cast<std::size_t>(k2));
  B.pos.assign(static_cast<std::size_t>(k2), -1);
  B.pi.resize(static_cast<std::size_t>(k2));
  B.is_critical.assign(static_cast<std::size_t>(k2), 0);
  B.marked = 0;
  for (int s = 0; s < k2; ++s) {
    B.fiber[static_cast<std::size_t>(s)] = s % n;
    B.pi[static_cast<std::size_t>(s)] = (s + 1) % k2;
  }
  for (int i = 0; i < k1; ++i) {
    if (!A.is_critical[static_cast<std::size_t>(i)]) continue;
    std::vector<std::pair<int, int>> slots;
    for (int t = i; t < K; t += k1)
      slots.emplace_back(v.pos[static_cast<std::size_t>(t)], t);
    std::sort(slots.begin(), slots.end());
    for (int r = 0; r < m2; ++r) {
      const int t = slots[static_cast<std::size_t>(r)].second;
      const int s = sidx[static_cast<std::size_t>(t)];
      if (B.pos[static_cast<std::size_t>(s)] >= 0) return std::nullopt;
      // slots inside a critical block mirror the deep order exactly when
      // that fiber's rescaling is positive
      B.pos[static_cast<std::size_t>(s)] =
          zp[static_cast<std::size_t>(i % n)] ? m2 - 1 - r : r;
      B.is_critical[static_cast<std::size_t>(s)] =
          B.is_critical[static_cast<std::size_t>(s)] | v.crit[static_cast<std::size_t>(t)];
    }
  }
  for (int s = 0; s < k2; ++s)
    if (B.pos[static_cast<std::size_t>(s)] < 0) return std::nullopt;
  try {
    validate_data(B);
  } catch (const std::exception&) {
    return std::nullopt;
  }

  Combinatorics ca = canonical_form(A), cb = canonical_form(B);
  if (product(ca, cb).text != whole_text) return std::nullopt;
  return std::make_pair(std::move(ca), std::move(cb));
}

}  // namespace

std::vector<Combinatorics> factorize(const Combinatorics& M, int m_cap) {
  const CombinatorialData d = parse_combinatorics(M.text);
  if (d.m > m_cap) throw domain_error("factorize: m exceeds cap");
  const Combinatorics canon = canonical_form(d);
  if (!single_cycle(d)) return {canon};
  const CycleView v = make_view(d);
  for (int m1 = 2; m1 * 2 <= d.m; ++m1) {
    if (d.m % m1 != 0) continue;
    auto sp = split_once(v, canon.text, m1);
    if (sp) {
      std::vector<Combinatorics> out{sp->first};
      std::vector<Combinatorics> rest = factorize(sp->second, m_cap);
      out.insert(out.end(), rest.begin(), rest.end());
      return out;
    }
  }
  return {canon};
}

bool is_primitive(const Combinatorics& M, int m_cap) {
  return factorize(M, m_cap).size() == 1;
}

namespace {

// Image positions of one fiber's labels listed by rank: ascending through
// the chosen set left of the critical, the top at the critical, descending
// through the complement right of it.
std::vector<int> fold_shape(int m, unsigned mask) {
  std::vector<int> left, right;
  for (int val = 0; val < m - 1; ++val)
    ((mask >> val) & 1u ? left : right).push_back(val);
  std::vector<int> s;
  s.reserve(static_cast<std::size_t>(m));
  s.insert(s.end(), left.begin(), left.end());
  s.push_back(m - 1);
  for (auto it = right.rbegin(); it != right.rend(); ++it) s.push_back(*it);
  return s;
}

}  // namespace

std::vector<Combinatorics> enumerate_combinatorics(int n_type, int m) {
  if (m < 2) throw domain_error("enumerate: m must be at least 2");
  if (m > 20) throw domain_error("enumerate: m too large");
  std::vector<Combinatorics> out;
  if (n_type == 1) {
    const unsigned lim = 1u << (m - 1);
    for (unsigned mask = 0; mask < lim; ++mask) {
      const std::vector<int> s = fold_shape(m, mask);
      const int q = __builtin_popcount(mask);
      std::vector<int> pos(static_cast<std::size_t>(m));
      std::vector<char> seen(static_cast<std::size_t>(m), 0);
      pos[0] = q;
      seen[static_cast<std::size_t>(q)] = 1;
      bool ok = true;
      for (int t = 1; t < m; ++t) {
        pos[static_cast<std::size_t>(t)] =
            s[static_cast<std::size_t>(pos[static_cast<std::size_t>(t - 1)])];
        if (seen[static_cast<std::size_t>(pos[static_cast<std::size_t>(t)])]) {
          ok = false;
          break;
        }
        seen[static_cast<std::size_t>(pos[static_cast<std::size_t>(t)])] = 1;
      }
      if (!ok) continue;
      CombinatorialData d;
      d.n_type = 1;
      d.m = m;
      d.fiber.assign(static_cast<std::size_t>(m), 0);
      d.pos = pos;
      d.pi.resize(static_cast<std::size_t>(m));
      d.is_critical.assign(static_cast<std::size_t>(m), 0);
      d.is_critical[0] = 1;
      d.marked = 0;
      for (int t = 0; t < m; ++t) d.pi[static_cast<std::size_t>(t)] = (t + 1) % m;
      out.push_back(canonical_form(d));
    }
  } else if (n_type == 2) {
    const unsigned lim = 1u << (m - 1);
    for (unsigned mask0 = 0; mask0 < lim; ++mask0) {
      const std::vector<int> s0 = fold_shape(m, mask0);
      const int q0 = __builtin_popcount(mask0);
      for (unsigned mask1 = 0; mask1 < lim; ++mask1) {
        const std::vector<int> s1 = fold_shape(m, mask1);
        const int q1 = __builtin_popcount(mask1);
        // every cycle of s1 after s0 must pass a critical label: position q0
        // on fiber 0, or the image position of the fiber-1 critical
        std::vector<char> done(static_cast<std::size_t>(m), 0);
        bool ok = true;
        for (int x0 = 0; x0 < m && ok; ++x0) {
          if (done[static_cast<std::size_t>(x0)]) continue;
          bool hit = false;
          int x = x0;
          do {
            done[static_cast<std::size_t>(x)] = 1;
            hit = hit || x == q0 || x == s1[static_cast<std::size_t>(q1)];
            x = s1[static_cast<std::size_t>(s0[static_cast<std::size_t>(x)])];
          } while (x != x0);
          ok = hit;
        }
        if (!ok) continue;
        CombinatorialData d;
        d.n_type = 2;
        d.m = m;
        const int nm = 2 * m;
        d.fiber.resize(static_cast<std::size_t>(nm));
        d.pos.resize(static_cast<std::size_t>(nm));
        d.pi.resize(static_cast<std::size_t>(nm));
        d.is_critical.assign(static_cast<std::size_t>(nm), 0);
        for (int x = 0; x < m; ++x) {
          d.fiber[static_cast<std::size_t>(x)] = 0;
          d.pos[static_cast<std::size_t>(x)] = x;
          d.pi[static_cast<std::size_t>(x)] = m + s0[static_cast<std::size_t>(x)];
          d.fiber[static_cast<std::size_t>(m + x)] = 1;
          d.pos[static_cast<std::size_t>(m + x)] = x;
          d.pi[static_cast<std::size_t>(m + x)] = s1[static_cast<std::size_t>(x)];
        }
        d.is_critical[static_cast<std::size_t>(q0)] = 1;
        d.is_critical[static_cast<std::size_t>(m + q1)] = 1;
        d.marked = q0;
        out.push_back(canonical_form(d));
      }
    }
  } else {
    throw domain_error("enumerate: type must be 1 or 2");
  }
  std::sort(out.begin(), out.end());
  return out;
}

Combinatorics doubling_combinatorics() {
  CombinatorialData d;
  d.n_type = 1;
  d.m = 2;
  d.fiber = {0, 0};
  d.pos = {0, 1};
  d.pi = {1, 0};
  d.is_critical = {1, 0};
  d.marked = 0;
  return canonical_form(d);
}

}  // namespace renormlab
