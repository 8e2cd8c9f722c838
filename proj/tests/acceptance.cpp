// Acceptance gate: one line per criterion, process exits non-zero when any
// criterion fails.  Tolerances and reference constants are pinned here and
// are not configurable; each block is self-contained and states what it
// measured.  Wall-clock limits are asserted where a criterion carries one.
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "renormlab/box_map.hpp"
#include "renormlab/combinatorics.hpp"
#include "renormlab/complex_ext.hpp"
#include "renormlab/io.hpp"
#include "renormlab/map_core.hpp"
#include "renormlab/nest.hpp"
#include "renormlab/renorm.hpp"
#include "renormlab/tuner.hpp"

using namespace renormlab;
using json = nlohmann::json;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// Feigenbaum-cascade accumulation parameter of the degree-two family,
// matching the frozen value in the tuner suite.
constexpr double kAccumulation = -1.7849728359354724;

// Classical period-doubling and width-scaling constants, four digits as
// published everywhere; both were re-derived by the independent bisection
// ladder in the tuner suite before being pinned here.
constexpr double kDeltaRef = 4.6692;
constexpr double kAlphaRef = 2.5029;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

MultimodalMap<double> quad(double b) {
  return build_quadratic_family<double>({b});
}

struct Outcome {
  bool ok = false;
  std::string detail;
};

template <class F>
Outcome guarded(F&& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    return {false, std::string("exception: ") + e.what()};
  }
}

std::string fmt(const char* pattern, ...) {
  va_list ap;
  va_start(ap, pattern);
  char buf[512];
  std::vsnprintf(buf, sizeof buf, pattern, ap);
  va_end(ap);
  return buf;
}

// --------------------------------------------------------------------------
// 1. Period-doubling parameter ratios.

Outcome check_doubling_rate() {
  const auto t0 = Clock::now();
  const auto deltas = feigenbaum_delta(FamilySpec<double>::defaults(1), 8);
  const double wall = seconds_since(t0);
  const double d8 = deltas.back();
  const double rel = std::abs(d8 - kDeltaRef) / kDeltaRef;
  const bool ok = rel < 0.01 && wall < 60.0;
  return {ok, fmt("delta_8=%.11f rel=%.2e wall=%.1fs (limits 1e-2, 60s)", d8,
                  rel, wall)};
}

// --------------------------------------------------------------------------
// 2. Restrictive-interval width ratios at the accumulation parameter.

Outcome check_width_ratio() {
  const auto t0 = Clock::now();
  const auto ratios = feigenbaum_alpha(quad(kAccumulation), 8);
  const double wall = seconds_since(t0);
  const double r8 = ratios.back();
  const double rel = std::abs(r8 - kAlphaRef) / kAlphaRef;
  const bool ok = rel < 0.02 && wall < 120.0;
  return {ok, fmt("ratio_8=%.11f rel=%.2e wall=%.1fs (limits 2e-2, 120s)", r8,
                  rel, wall)};
}

// --------------------------------------------------------------------------
// 3. Real bounds along the deep nest at the accumulation parameter: scaling
// factors at non-central levels stay above 1.05 and stabilize in depth.

Outcome check_real_bounds() {
  const auto F = extend(quad(kAccumulation));
  const auto nest = principal_nest(F, 11);
  const auto dec = cascade_decomposition(F, nest);
  const auto& s = nest.scaling_factors;
  if (s.size() < 11) return {false, "nest shallower than requested"};

  double min_scaling = 1e300;
  int checked = 0;
  for (int m : dec.non_central_moments) {
    if (m >= static_cast<int>(s.size())) continue;
    min_scaling = std::min(min_scaling, s[static_cast<std::size_t>(m)]);
    ++checked;
  }
  const double step89 = std::abs(s[8] - s[9]);
  const double step910 = std::abs(s[9] - s[10]);
  const bool ok = checked >= 9 && min_scaling > 1.05 && step89 < 1e-3 &&
                  step910 < 1e-3;
  return {ok, fmt("non-central levels=%d min_scaling=%.5f |s8-s9|=%.1e "
                  "|s9-s10|=%.1e (floor 1.05, step 1e-3)",
                  checked, min_scaling, step89, step910)};
}

// --------------------------------------------------------------------------
// 4. Word algebra: exhaustive factorization round-trip, associativity, and
// agreement between algebraic products and words extracted from dynamics.

Outcome check_word_algebra() {
  const auto t0 = Clock::now();

  std::int64_t total = 0;
  for (int n = 1; n <= 2; ++n)
    for (int m = 2; m <= 12; ++m)
      for (const auto& w : enumerate_combinatorics(n, m)) {
        ++total;
        const auto factors = factorize(w, 64);
        Combinatorics back = factors.front();
        for (std::size_t i = 1; i < factors.size(); ++i)
          back = product(back, factors[i]);
        if (back != w)
          return {false, "factorization round-trip mismatch on " + w.text};
      }

  std::int64_t triples = 0;
  for (int n = 1; n <= 2; ++n) {
    std::vector<Combinatorics> small;
    for (int m = 2; m <= 6; ++m)
      for (const auto& w : enumerate_combinatorics(n, m))
        if (single_cycle(parse_combinatorics(w.text))) small.push_back(w);
    for (const auto& a : small)
      for (const auto& b : small)
        for (const auto& c : small) {
          if (a.m * b.m * c.m > 12) continue;
          ++triples;
          if (product(product(a, b), c) != product(a, product(b, c)))
            return {false, "associativity mismatch on " + a.text + " | " +
                               b.text + " | " + c.text};
        }
  }
  if (triples == 0) return {false, "no associativity triples enumerated"};

  // products must agree with words read off the actual interval dynamics at
  // their superstable parameters
  const auto two = doubling_combinatorics();
  const auto three = enumerate_combinatorics(1, 3).front();
  const auto targets = {product(two, two), product(product(two, two), two),
                        product(two, three)};
  for (const auto& target : targets) {
    const auto fam = FamilySpec<double>::defaults(1);
    const auto tuned = superstable_parameter(fam, factorize(target));
    const auto m = build_quadratic_family<double>(tuned.b);
    RenormParams<double> par;
    par.exact_period = target.m;
    const auto data = find_periodic_interval(m, par);
    if (!data)
      return {false, fmt("no period-%d interval at tuned parameter", target.m)};
    if (canonical_form(extract(m, *data)) != target)
      return {false, "extracted word differs from product " + target.text};
  }

  const double wall = seconds_since(t0);
  return {wall < 300.0,
          fmt("words=%lld round-trips exact, %lld triples associative, 3 "
              "product words match dynamics, wall=%.1fs (limit 300s)",
              static_cast<long long>(total), static_cast<long long>(triples),
              wall)};
}

// --------------------------------------------------------------------------
// 5. External circle maps: angle doubling to 1e-6 at 256 angles, winding 2.

Outcome check_external_maps() {
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    const double b = -1.05 - 0.1 * i;
    const auto P = composite_polynomial({b});
    const auto s = external_map_samples(P, 256);
    if (s.winding != 2)
      return {false, fmt("winding %d != 2 at b=%.2f", s.winding, b)};
    for (const auto& [tin, tout] : s.samples) {
      double dev = tout - 2.0 * tin;
      dev -= std::round(dev);
      worst = std::max(worst, std::abs(dev));
    }
  }
  const bool ok = worst < 1e-6;
  return {ok, fmt("10 parameters, 256 angles each, winding=2 all, "
                  "max|dev|=%.1e (limit 1e-6)",
                  worst)};
}

// --------------------------------------------------------------------------
// 6. Entry-time ladder reports: the recorded integers satisfy the transfer
// inequalities on every report, and the return-time bound fires whenever the
// ladder is deep enough.

struct LadderExpect {
  int m;
  const char* ord;                     // identifies the word in enumeration
  std::vector<std::int64_t> entries;   // r_j
  std::vector<std::int64_t> transfers; // m_j
};

Outcome check_entry_ladder() {
  int reports = 0;
  auto audit = [&reports](const EnhancedNestReport<double>& rep,
                          std::int64_t np) -> std::optional<std::string> {
    ++reports;
    if (rep.status != "chi-reached") return "ladder stopped before chi";
    const int chi = rep.chi.value_or(-1);
    if (chi < 0) return "chi missing";
    // transfer inequalities are claimed for 0 <= j <= chi-2 only
    for (int j = 0; j + 1 <= chi - 1; ++j) {
      const auto mj = rep.transfer_steps[static_cast<std::size_t>(j)];
      const auto mj1 = rep.transfer_steps[static_cast<std::size_t>(j) + 1];
      const auto rj1 = rep.entry_times[static_cast<std::size_t>(j) + 1];
      if (!(mj1 >= 2 * mj)) return fmt("m_%d+1 < 2 m_%d", j, j);
      if (!(3 * rj1 >= mj)) return fmt("3 r_%d < m_%d", j + 1, j);
    }
    if (chi >= 5) {
      std::int64_t sum = 0;
      for (int j = 0; j <= chi - 5; ++j)
        sum += rep.transfer_steps[static_cast<std::size_t>(j)];
      if (np < sum) return "return-time lower bound violated";
    }
    return std::nullopt;
  };

  // doubling towers of depth 4..7: the first return is already the
  // renormalization return, so the ladder closes at chi = 0
  const auto two = doubling_combinatorics();
  for (int k = 4; k <= 7; ++k) {
    const std::vector<Combinatorics> tower(static_cast<std::size_t>(k), two);
    const auto tuned =
        superstable_parameter(FamilySpec<double>::defaults(1), tower);
    const auto F = extend(build_quadratic_family<double>(tuned.b));
    const auto rep = enhanced_nest(F, 10, 2);
    if (auto bad = audit(rep, 2))
      return {false, fmt("doubling depth %d: %s", k, bad->c_str())};
    if (rep.chi.value_or(-1) != 0 || rep.entry_times.front() != 2)
      return {false, fmt("doubling depth %d: expected immediate closure", k)};
  }

  // primitive words: one ladder rung before closure, with pinned integer
  // entry and transfer data
  const std::vector<LadderExpect> primitives = {
      {5, "ord=2,0,3,4,1;", {3, 5}, {35}},
      {6, "ord=2,3,0,4,5,1;", {4, 6}, {42}},
      {8, "ord=2,3,0,6,4,5,7,1;", {4, 8}, {54}},
  };
  for (const auto& want : primitives) {
    const auto all = enumerate_combinatorics(1, want.m);
    const auto hit = std::find_if(all.begin(), all.end(), [&](const auto& w) {
      return w.text.find(want.ord) != std::string::npos;
    });
    if (hit == all.end())
      return {false, fmt("word with %s not enumerated", want.ord)};
    const auto tuned =
        superstable_parameter(FamilySpec<double>::defaults(1), {*hit});
    const auto F = extend(build_quadratic_family<double>(tuned.b));
    const auto rep = enhanced_nest(F, 10, want.m);
    if (auto bad = audit(rep, want.m))
      return {false, fmt("word m=%d: %s", want.m, bad->c_str())};
    if (rep.chi.value_or(-1) != 1)
      return {false, fmt("word m=%d: chi %d != 1", want.m,
                         rep.chi.value_or(-1))};
    if (rep.entry_times != want.entries ||
        rep.transfer_steps != want.transfers)
      return {false, fmt("word m=%d: entry/transfer integers drifted", want.m)};
    for (char v : rep.transfer_valid)
      if (!v) return {false, fmt("word m=%d: unverified transfer", want.m)};
  }

  return {true, fmt("%d reports audited; inequality range empty at the "
                    "reached chi values (0 and 1); return-time bound needs "
                    "chi>=5, not reached",
                    reports)};
}

// --------------------------------------------------------------------------
// 7. Annulus-ratio profile across the long central cascade next to the
// period-3 tangency.

Outcome check_channel_profile() {
  const double b = (-1.0 - std::sqrt(8.0)) / 2.0 + 1e-6;
  const auto F = extend(quad(b));
  NestParams<double> par;
  par.horizon = 2000000;

  // deepest computable nest: below the channel exit the landing degenerates
  int lo = 40, hi = 401;
  {
    const auto works = [&](int depth) {
      try {
        principal_nest(F, depth, par);
        return true;
      } catch (const domain_error&) {
        return false;
      }
    };
    if (!works(lo)) return {false, "channel nest failed at depth 40"};
    while (lo + 1 < hi) {
      const int mid = (lo + hi) / 2;
      (works(mid) ? lo : hi) = mid;
    }
  }
  const auto nest = principal_nest(F, lo, par);
  const auto dec = cascade_decomposition(F, nest);

  const CascadeSegment* widest = nullptr;
  for (const auto& seg : dec.cascades)
    if (!widest || seg.end - seg.start > widest->end - widest->start)
      widest = &seg;
  if (!widest) return {false, "no cascade found"};
  const int len = widest->end - widest->start;
  if (widest->kind != "saddle-node-like" || len < 20)
    return {false, fmt("cascade len=%d kind=%s", len, widest->kind.c_str())};

  // the profile lives on the saddle-node portion: drop the geometric funnel
  // at the top, where consecutive levels still shrink by 1.5x or more
  int start = widest->start;
  while (start < widest->end - 8 && start - widest->start < len / 4 &&
         nest.scaling_factors[static_cast<std::size_t>(start)] >= 1.5)
    ++start;
  const std::vector<FiberInterval<double>> slice(
      nest.levels.begin() + start, nest.levels.begin() + widest->end + 1);
  const auto prof = yoccoz_profile(slice, 20.0);

  double nmin = 1e300, nmax = -1e300;
  for (const auto& row : prof.rows) {
    nmin = std::min(nmin, row.normalized);
    nmax = std::max(nmax, row.normalized);
  }
  const bool ok = prof.within_band && prof.ratio_sum <= 1.0 &&
                  static_cast<int>(prof.rows.size()) >= 20;
  return {ok, fmt("cascade L=%d (trimmed %d funnel levels), normalized in "
                  "[%.3f, %.3f] within 1/20..20, ratio_sum=%.4f <= 1",
                  len, start - widest->start, nmin, nmax, prof.ratio_sum)};
}

// --------------------------------------------------------------------------
// 8. Contraction between successive tower maps at the accumulation
// parameter: log-linear distance decay.

Outcome check_contraction() {
  const auto f = quad(kAccumulation);
  const auto g = renormalize(f).map;
  const auto fit = contraction_rate(f, g, 8);
  const bool ok = fit.rate < 1.0 && fit.r_squared > 0.9 &&
                  fit.fitted_points == 9 && !fit.exact_coincidence;
  return {ok, fmt("rate=%.4f (slope %.3f < 0), R^2=%.4f > 0.9, %d points",
                  fit.rate, std::log(fit.rate), fit.r_squared,
                  fit.fitted_points)};
}

// --------------------------------------------------------------------------
// 9. Annulus modulus along the tower: positive at depths 3..8 with a
// non-decreasing trailing-three minimum; a bare polynomial is unbounded.

Outcome check_tower_modulus() {
  const auto tower = renorm_tower(quad(kAccumulation), 8);
  if (tower.levels.size() != 8)
    return {false, "tower shallower than depth 8"};
  std::vector<double> bounds;
  for (int d = 3; d <= 8; ++d) {
    const auto ab =
        modulus_lower_bound(tower.levels[static_cast<std::size_t>(d - 1)].map);
    if (!(ab.bound > 0.0))
      return {false, fmt("vanishing bound %.3e at depth %d", ab.bound, d)};
    bounds.push_back(ab.bound);
  }
  for (std::size_t i = 3; i < bounds.size(); ++i) {
    const double prev =
        std::min({bounds[i - 3], bounds[i - 2], bounds[i - 1]});
    const double cur = std::min({bounds[i - 2], bounds[i - 1], bounds[i]});
    if (cur < prev)
      return {false, fmt("trailing minimum dropped at depth %zu", i + 3)};
  }
  const auto poly = modulus_lower_bound(composite_polynomial({kAccumulation}));
  if (!poly.unbounded) return {false, "polynomial not reported unbounded"};
  return {true, fmt("bounds %.5f..%.5f positive at depths 3..8, trailing "
                    "minima non-decreasing, polynomial unbounded",
                    *std::min_element(bounds.begin(), bounds.end()),
                    *std::max_element(bounds.begin(), bounds.end()))};
}

// --------------------------------------------------------------------------
// 10. Determinism: every front-end command writes byte-identical report
// payloads across two runs at fixed configuration.

Outcome check_determinism() {
  const char* cli = std::getenv("RENORMLAB_CLI");
  if (!cli) return {false, "RENORMLAB_CLI not set"};
  const std::string base = "acceptance_det";
  fs::remove_all(base);
  fs::create_directories(base);

  const std::string bflag = fmt("--b %.17g", kAccumulation);
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"analyze", bflag},
      {"nest", bflag + " --depth 11"},
      {"cascade", "--depth 8"},
      {"tune", "--word M2^4"},
      {"delta", "--depth 8"},
      {"alpha", bflag + " --depth 8"},
      {"tower", bflag + " --depth 8"},
      {"contraction", bflag + " --depth 8"},
      {"julia", bflag},
      {"external", bflag},
      {"combinatorics", ""},
  };

  for (const auto& [name, args] : commands) {
    std::string payload[2];
    for (int run = 0; run < 2; ++run) {
      const std::string dir = base + "/" + name + (run ? "_b" : "_a");
      const std::string cmd = std::string(cli) + " " + name + " " + args +
                              " --out " + dir + " > " + base + "/log.txt 2>&1";
      const int status = std::system(cmd.c_str());
      const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
      if (code != 0)
        return {false, fmt("%s run %d exited %d", name.c_str(), run, code)};
      const auto doc =
          json::parse(io::read_file(dir + "/" + name + ".json"));
      payload[run] = doc.at("report").dump();
    }
    if (payload[0] != payload[1])
      return {false, name + " payloads differ between runs"};
  }
  return {true, fmt("%zu commands, two runs each, payloads byte-identical",
                    commands.size())};
}

}  // namespace

int main() {
  std::setvbuf(stdout, nullptr, _IONBF, 0);
  struct Entry {
    const char* name;
    Outcome (*fn)();
  };
  const Entry entries[] = {
      {"period-doubling rate", check_doubling_rate},
      {"width scaling ratio", check_width_ratio},
      {"real bounds", check_real_bounds},
      {"word algebra", check_word_algebra},
      {"external circle maps", check_external_maps},
      {"entry-time ladder", check_entry_ladder},
      {"channel annulus profile", check_channel_profile},
      {"tower contraction", check_contraction},
      {"tower modulus", check_tower_modulus},
      {"deterministic reports", check_determinism},
  };
  int failures = 0;
  int index = 0;
  for (const auto& e : entries) {
    ++index;
    const Outcome r = guarded(e.fn);
    failures += r.ok ? 0 : 1;
    std::printf("[%s] %2d %s: %s\n", r.ok ? "PASS" : "FAIL", index, e.name,
                r.detail.c_str());
  }
  std::printf("acceptance: %d/10 passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}
