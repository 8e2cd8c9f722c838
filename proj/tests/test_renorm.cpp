#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "renormlab/renorm.hpp"
#include "renormlab/scalar.hpp"

using namespace renormlab;

namespace {

double golden_param() { return (-1.0 - std::sqrt(5.0)) / 2.0; }

// x -> bx^2 - b - 1 is conjugate to y -> y^2 + c with c = -b(b+1), so
// classical parameters of the latter carry over in closed form.
double param_from_c(double c) { return (-1.0 - std::sqrt(1.0 - 4.0 * c)) / 2.0; }

double doubling_accumulation_param() {
  return param_from_c(-1.4011551890920506);
}

double period3_superstable_param() {
  return param_from_c(-1.7548776662466927);
}

MultimodalMap<double> quad(double b) {
  return build_quadratic_family<double>({b});
}

double direct_return(const MultimodalMap<double>& m, double z0,
                     std::int64_t k, double x) {
  const ExtendedMap<double> F{m, 0.0, 0.0};
  return F.iterate(FiberPoint<double>{-z0 * x, 0}, k).x / (-z0);
}

}  // namespace

TEST_CASE("superstable period two yields the widest symmetric 2-interval") {
  const double b = golden_param();
  const double alpha = (b + 1.0) / b;
  auto m = quad(b);

  auto data = find_periodic_interval(m);
  REQUIRE(data.has_value());
  CHECK(data->p == 2);
  CHECK(data->k == 2);
  CHECK(data->boundary_point == doctest::Approx(alpha).epsilon(1e-12));
  CHECK(data->J.hi == doctest::Approx(alpha).epsilon(1e-12));
  CHECK(data->J.lo == doctest::Approx(-alpha).epsilon(1e-12));
  REQUIRE(data->visit_times.size() == 1);
  CHECK(data->visit_times[0] == 0);
  REQUIRE(data->normalizer_scales.size() == 1);
  CHECK(data->normalizer_scales[0] == doctest::Approx(alpha).epsilon(1e-12));

  auto rr = renormalize_with(m, *data);
  CHECK(validate(rr.map).ok);
  CHECK(std::abs(eval(rr.map, 0.0)) < 1e-12);
  CHECK(eval(rr.map, -1.0) == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("rescaled return map matches the direct normalized return") {
  auto m = quad(param_from_c(-1.3107026413368328));
  auto rr = renormalize(m);
  REQUIRE(rr.data.p == 2);
  const double z0 = rr.data.normalizer_scales[0];
  for (int i = 0; i <= 64; ++i) {
    const double x = -1.0 + 2.0 * i / 64.0;
    CHECK(eval(rr.map, x) ==
          doctest::Approx(direct_return(m, z0, rr.data.k, x)).epsilon(1e-12));
  }
}

TEST_CASE("doubling accumulation renormalizes onto the reversing fixed point") {
  const double b = doubling_accumulation_param();
  const double alpha = (b + 1.0) / b;
  auto m = quad(b);

  auto data = find_periodic_interval(m);
  REQUIRE(data.has_value());
  CHECK(data->p == 2);
  CHECK(data->boundary_point == doctest::Approx(alpha).epsilon(1e-9));

  auto rr = renormalize_with(m, *data);
  const double f2_0 = eval(m, eval(m, 0.0));
  CHECK(eval(rr.map, 0.0) == doctest::Approx(-f2_0 / alpha).epsilon(1e-12));
  CHECK(eval(rr.map, 0.0) == doctest::Approx(0.716).epsilon(2e-2));
}

TEST_CASE("repeated renormalization at the doubling accumulation") {
  auto tower = renorm_tower(quad(doubling_accumulation_param()), 5);
  CHECK(tower.status == "depth-reached");
  REQUIRE(tower.levels.size() == 5);
  for (const auto& lv : tower.levels) {
    CHECK(lv.data.p == 2);
    CHECK(validate(lv.map).ok);
    CHECK(lv.data.J.hi > 0.3);
    CHECK(lv.data.J.hi < 0.5);
  }
  // Iterate segments stack, so evaluation cost doubles per level.
  CHECK(eval_cost(tower.levels[2].map.factors[0]) == 8);

  // Levels approach a fixed map: critical values settle down.
  const double v1 = eval(tower.levels[1].map, 0.0);
  const double v2 = eval(tower.levels[2].map, 0.0);
  const double v3 = eval(tower.levels[3].map, 0.0);
  const double v4 = eval(tower.levels[4].map, 0.0);
  CHECK(std::abs(v4 - v3) < std::abs(v2 - v1));
  CHECK(std::abs(v4 - v3) < 5e-3);
}

TEST_CASE("twice-renormalizable parameter stops at depth two") {
  const double b2 = param_from_c(-1.3107026413368328);
  {
    // The frozen parameter really is superstable of period four.
    const ExtendedMap<double> F{quad(b2), 0.0, 0.0};
    CHECK(std::abs(F.iterate(FiberPoint<double>{0.0, 0}, 4).x) < 1e-9);
  }

  auto tower = renorm_tower(quad(b2), 4);
  CHECK(tower.status == "not-renormalizable");
  REQUIRE(tower.levels.size() == 2);
  CHECK(tower.levels[0].data.p == 2);
  CHECK(tower.levels[1].data.p == 2);
  CHECK(std::abs(eval(tower.levels[1].map, 0.0)) < 1e-9);
  CHECK(!find_periodic_interval(tower.levels[1].map).has_value());
}

TEST_CASE("superstable fixed point admits no periodic interval") {
  auto tower = renorm_tower(quad(golden_param()), 3);
  CHECK(tower.status == "not-renormalizable");
  CHECK(tower.levels.size() == 1);
}

TEST_CASE("full-height parameter admits no periodic interval") {
  CHECK(!find_periodic_interval(quad(-2.0)).has_value());
  CHECK_THROWS_AS(renormalize(quad(-2.0)), domain_error);
}

TEST_CASE("period-three window renormalizes with the smallest period three") {
  auto m = quad(period3_superstable_param());
  auto data = find_periodic_interval(m);
  REQUIRE(data.has_value());
  CHECK(data->p == 3);
  CHECK(data->k == 3);
  CHECK(data->J.hi > 0.05);
  CHECK(data->J.hi < 0.3);

  const ExtendedMap<double> F{m, 0.0, 0.0};
  const double z = data->boundary_point;
  CHECK(F.iterate(FiberPoint<double>{z, 0}, 3).x ==
        doctest::Approx(z).epsilon(1e-8));

  auto rr = renormalize_with(m, *data);
  CHECK(std::abs(eval(rr.map, 0.0)) < 1e-9);
  CHECK(eval(rr.map, -1.0) == doctest::Approx(-1.0).epsilon(1e-10));
}

TEST_CASE("period-two renormalization fills a contiguous parameter window") {
  for (int i = 0; i <= 10; ++i) {
    const double b = -1.80 + 0.017 * i;
    auto rr = renormalize(quad(b));
    CHECK(rr.data.p == 2);
    CHECK(validate(rr.map).ok);
  }
}

TEST_CASE("return map outside the family class is rejected, not repaired") {
  // Here the 2-interval exists geometrically, but the return map has a
  // negative critical value, so it leaves the class and must throw.
  auto m = quad(-1.55);
  auto data = find_periodic_interval(m);
  REQUIRE(data.has_value());
  CHECK(data->p == 2);
  CHECK(eval(m, eval(m, 0.0)) > 0.0);
  CHECK_THROWS_AS(renormalize_with(m, *data), domain_error);
}

TEST_CASE("quadruple precision renormalization at the superstable parameter") {
  const f128 b = (f128(-1) - sqrt(f128(5))) / 2;
  const f128 alpha = (b + 1) / b;
  auto m = build_quadratic_family<f128>({b});
  auto rr = renormalize(m);
  CHECK(rr.data.p == 2);
  CHECK(abs(rr.data.J.hi - alpha) < f128(1e-30));
  CHECK(abs(eval(rr.map, f128(0))) < f128(1e-30));
}
