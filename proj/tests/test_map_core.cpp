#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>

#include "renormlab/map_core.hpp"

using namespace renormlab;

namespace {
double golden_param() { return (-1.0 - std::sqrt(5.0)) / 2.0; }
}  // namespace

TEST_CASE("quadratic factor evaluates b x^2 - b - 1") {
  auto m = build_quadratic_family<double>({-1.8});
  CHECK(eval(m, 0.5) == doctest::Approx(0.35).epsilon(1e-14));
  CHECK(eval(m, -1.0) == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(eval(m, 1.0) == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(eval(m, 0.0) == doctest::Approx(0.8).epsilon(1e-14));
}

TEST_CASE("golden parameter is superstable of period two") {
  // At b = (-1-sqrt 5)/2 the critical value is (sqrt 5 - 1)/2 and the second
  // image returns to the critical point exactly.
  auto m = build_quadratic_family<double>({golden_param()});
  const double v1 = eval(m, 0.0);
  CHECK(v1 == doctest::Approx((std::sqrt(5.0) - 1.0) / 2.0).epsilon(1e-15));
  CHECK(std::abs(eval(m, v1)) < 1e-15);

  auto orbit = critical_orbit(m, 0, 6);
  REQUIRE(orbit.size() == 6);
  CHECK(orbit[0].x == 0.0);
  CHECK(std::abs(orbit[2].x) < 1e-14);
  CHECK(std::abs(orbit[4].x) < 1e-14);
  CHECK(orbit[3].x == doctest::Approx(v1).epsilon(1e-13));
}

TEST_CASE("jets carry first and second derivatives") {
  auto m = build_quadratic_family<double>({-1.7});
  const Jet<double> j = eval_jet(m, jet_var(0.3));
  CHECK(j.v == doctest::Approx(-1.7 * 0.09 + 0.7).epsilon(1e-14));
  CHECK(j.d1 == doctest::Approx(2.0 * -1.7 * 0.3).epsilon(1e-14));
  CHECK(j.d2 == doctest::Approx(2.0 * -1.7).epsilon(1e-14));

  // Composite of two factors, chain rule checked analytically.
  auto m2 = build_quadratic_family<double>({-1.9, -1.3});
  const double x = 0.25;
  const double y = -1.9 * x * x + 0.9;
  const double d0 = -3.8 * x;
  const Jet<double> k = eval_jet(m2, jet_var(x));
  CHECK(k.v == doctest::Approx(-1.3 * y * y + 0.3).epsilon(1e-14));
  CHECK(k.d1 == doctest::Approx(-2.6 * y * d0).epsilon(1e-13));
  CHECK(k.d2 == doctest::Approx(-2.6 * d0 * d0 + (-2.6 * y) * -3.8)
                    .epsilon(1e-13));

  // Finite-difference cross-check of the composite.
  const double h = 1e-6;
  const double fd1 = (eval(m2, x + h) - eval(m2, x - h)) / (2 * h);
  const double fd2 = (eval(m2, x + h) - 2 * eval(m2, x) + eval(m2, x - h)) /
                     (h * h);
  CHECK(k.d1 == doctest::Approx(fd1).epsilon(1e-8));
  CHECK(k.d2 == doctest::Approx(fd2).epsilon(1e-3));
}

TEST_CASE("iterate segments apply affine conjugation and stay even") {
  auto base = std::make_shared<MultimodalMap<double>>(
      build_quadratic_family<double>({golden_param()}));
  IterateSegment<double> seg{base, 0, 2, Affine<double>{0.5, 0.0},
                             Affine<double>{2.0, 0.0}};
  UnimodalFactor<double> f{seg};

  const double x = 0.3;
  const double inner = eval(*base, eval(*base, 0.5 * x));
  CHECK(eval(f, x) == doctest::Approx(2.0 * inner).epsilon(1e-13));
  CHECK(eval(f, -x) == doctest::Approx(eval(f, x)).epsilon(1e-14));

  const Jet<double> jp = eval_jet(f, jet_var(x));
  const Jet<double> jn = eval_jet(f, jet_var(-x));
  CHECK(jn.d1 == doctest::Approx(-jp.d1).epsilon(1e-13));
  CHECK(jn.d2 == doctest::Approx(jp.d2).epsilon(1e-12));
}

TEST_CASE("eval cost counts polynomial applications") {
  auto m2 = build_quadratic_family<double>({-1.9, -1.3});
  CHECK(eval_cost(m2) == 2);

  auto base = std::make_shared<MultimodalMap<double>>(m2);
  IterateSegment<double> seg{base, 0, 6, Affine<double>{1.0, 0.0},
                             Affine<double>{1.0, 0.0}};
  MultimodalMap<double> r;
  r.n_type = 1;
  r.factors = {UnimodalFactor<double>{seg}};
  CHECK(eval_cost(r) == 6);
}

TEST_CASE("family rejects parameters outside [-2,-1]") {
  CHECK_THROWS_AS(build_quadratic_family<double>({-0.5}), domain_error);
  CHECK_THROWS_AS(build_quadratic_family<double>({-2.5}), domain_error);
  CHECK_THROWS_AS(build_quadratic_family<double>({-1.5, -0.99}), domain_error);
  CHECK_THROWS_AS(build_quadratic_family<double>({}), domain_error);
  CHECK_NOTHROW(build_quadratic_family<double>({-1.0}));
  CHECK_NOTHROW(build_quadratic_family<double>({-2.0}));
}

TEST_CASE("validation accepts quadratic families") {
  for (auto b : {std::vector<double>{-1.5}, std::vector<double>{-2.0},
                 std::vector<double>{-1.5, -1.2, -1.9}}) {
    auto rep = validate(build_quadratic_family<double>(b));
    CHECK(rep.ok);
    for (const auto& c : rep.checks) CHECK(c.pass);
  }
}

TEST_CASE("validation flags factor defects") {
  // f(0) = -0.5 < 0 violates only the critical-value sign requirement.
  MultimodalMap<double> m;
  m.n_type = 1;
  m.factors = {UnimodalFactor<double>{EvenPoly<double>{{-0.5, -0.5}}}};
  auto rep = validate(m);
  CHECK_FALSE(rep.ok);
  int failed = 0;
  for (const auto& c : rep.checks) {
    if (!c.pass) {
      ++failed;
      CHECK(c.name == "nonneg_critical_value");
    }
  }
  CHECK(failed == 1);

  // f(-1) != -1 and the range leaves [-1,1].
  MultimodalMap<double> m2;
  m2.n_type = 1;
  m2.factors = {UnimodalFactor<double>{EvenPoly<double>{{0.5, 0.3}}}};
  auto rep2 = validate(m2);
  CHECK_FALSE(rep2.ok);
  bool fixes_failed = false;
  for (const auto& c : rep2.checks)
    if (c.name == "fixes_minus_one" && !c.pass) fixes_failed = true;
  CHECK(fixes_failed);
}

TEST_CASE("critical orbit reports escape") {
  MultimodalMap<double> m;
  m.n_type = 1;
  m.factors = {UnimodalFactor<double>{EvenPoly<double>{{1.5, -2.0}}}};
  CHECK_THROWS_AS(critical_orbit(m, 0, 4), domain_error);
}

TEST_CASE("higher precision scalar instantiates the core") {
  CHECK(machine_eps<f128>() < f128(1e-37));
  CHECK(bisection_steps<f128>() > 128);
  auto m = build_quadratic_family<f128>({f128(-1.5)});
  const f128 v = eval(m, f128(0.25));
  CHECK(to_double(v) == doctest::Approx(-1.5 * 0.0625 + 0.5).epsilon(1e-15));
  const Jet<f128> j = eval_jet(m, jet_var(f128(0.25)));
  CHECK(to_double(j.d1) == doctest::Approx(-0.75).epsilon(1e-15));
}
