#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pvi/extended_real.hpp"

using pvi::ExtendedReal;

TEST_CASE("finite arithmetic embeds the reals") {
  ExtendedReal a = 1.5, b = -2.0;
  CHECK((a + b).value() == doctest::Approx(-0.5));
  CHECK((a - b).value() == doctest::Approx(3.5));
  CHECK((2.0 * a).value() == doctest::Approx(3.0));
  CHECK((a / 3.0).value() == doctest::Approx(0.5));
}

TEST_CASE("convex-analysis conventions with +inf") {
  const ExtendedReal inf = ExtendedReal::infinity();
  CHECK((ExtendedReal(7.0) + inf).is_pos_inf());
  CHECK((inf + ExtendedReal(-1e300)).is_pos_inf());
  CHECK((2.0 * inf).is_pos_inf());
  CHECK((-3.0 * inf).is_neg_inf());
  CHECK((0.0 * inf).value() == 0.0);
  CHECK((inf / -2.0).is_neg_inf());
  CHECK_THROWS_AS(inf + ExtendedReal::neg_infinity(), std::domain_error);
}

TEST_CASE("comparisons are total") {
  const ExtendedReal inf = ExtendedReal::infinity();
  const ExtendedReal ninf = ExtendedReal::neg_infinity();
  CHECK(ninf < ExtendedReal(-1e308));
  CHECK(ExtendedReal(1e308) < inf);
  CHECK(ninf < inf);
  CHECK(inf <= inf);
  CHECK(inf == inf);
  CHECK(ninf >= ninf);
  CHECK(ExtendedReal(2.0) < ExtendedReal(3.0));
  CHECK(pvi::max(ninf, ExtendedReal(0.0)).value() == 0.0);
  CHECK(pvi::min(inf, ExtendedReal(0.0)).value() == 0.0);
}

TEST_CASE("IEEE specials map to tags, NaN rejected") {
  ExtendedReal from_inf(std::numeric_limits<double>::infinity());
  CHECK(from_inf.is_pos_inf());
  ExtendedReal from_ninf(-std::numeric_limits<double>::infinity());
  CHECK(from_ninf.is_neg_inf());
  CHECK_THROWS_AS(ExtendedReal(std::nan("")), std::domain_error);
  CHECK_THROWS_AS(from_inf.value(), std::domain_error);
  CHECK(from_inf.value_or(5.0) == 5.0);
  CHECK(std::isinf(from_inf.to_double()));
}
