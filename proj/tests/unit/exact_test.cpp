#include <cmath>
#include <limits>
#include <string>

#include "doctest.h"
#include "exact.hpp"
#include "vitalguard/cir.hpp"
#include "vitalguard/common.hpp"

namespace vg = vitalguard;
namespace cir = vitalguard::cir;
namespace exact = vitalguard::exact;

TEST_SUITE("exact") {

TEST_CASE("doubles convert to their exact dyadic rational") {
  CHECK(exact::rat_of_double(0.5) == exact::Rat(1, 2));
  CHECK(exact::rat_of_double(-2.25) == exact::Rat(-9, 4));
  CHECK(exact::rat_of_double(3.0) == exact::Rat(3));
  // 0.1 is not one tenth: its exact value is 3602879701896397 / 2^55.
  const exact::Rat tenth_double = exact::rat_of_double(0.1);
  CHECK(tenth_double == exact::Rat(3602879701896397L, 36028797018963968L));
  CHECK(tenth_double != exact::Rat(1, 10));

  CHECK_THROWS_AS((void)exact::rat_of_double(
                      std::numeric_limits<double>::quiet_NaN()),
                  vg::Error);
  CHECK_THROWS_AS((void)exact::rat_of_double(
                      std::numeric_limits<double>::infinity()),
                  vg::Error);
}

TEST_CASE("decimal numerals parse to exact rationals") {
  CHECK(exact::decimal_to_rat("0.1") == exact::Rat(1, 10));
  CHECK(exact::decimal_to_rat("-0.25") == exact::Rat(-1, 4));
  CHECK(exact::decimal_to_rat("1.5e2") == exact::Rat(150));
  CHECK(exact::decimal_to_rat("2E-3") == exact::Rat(1, 500));
  CHECK(exact::decimal_to_rat("+7") == exact::Rat(7));
  CHECK(exact::decimal_to_rat("42.") == exact::Rat(42));

  CHECK_THROWS_AS((void)exact::decimal_to_rat(""), vg::Error);
  CHECK_THROWS_AS((void)exact::decimal_to_rat("1.2.3"), vg::Error);
  CHECK_THROWS_AS((void)exact::decimal_to_rat("abc"), vg::Error);
  CHECK_THROWS_AS((void)exact::decimal_to_rat("1e"), vg::Error);
}

TEST_CASE("canonical fraction strings parse back") {
  CHECK(exact::rat_of_string("5") == exact::Rat(5));
  CHECK(exact::rat_of_string("-3/4") == exact::Rat(-3, 4));
  const exact::Rat r(123456789, 1024);
  CHECK(exact::rat_of_string(r.get_str()) == r);
  CHECK_THROWS_AS((void)exact::rat_of_string("3/"), vg::Error);
  CHECK_THROWS_AS((void)exact::rat_of_string("x/y"), vg::Error);
}

TEST_CASE("nearest_double round trips doubles and rounds fairly") {
  vg::Rng rng(83);
  for (int i = 0; i < 2000; ++i) {
    const double x = rng.uniform(-1e6, 1e6);
    CHECK(exact::nearest_double(exact::rat_of_double(x)) == x);
  }
  // 1/3 rounds to the representable double nearest to one third.
  CHECK(exact::nearest_double(exact::Rat(1, 3)) == 1.0 / 3.0);
  CHECK(exact::nearest_double(exact::Rat(2, 3)) == 2.0 / 3.0);
}

TEST_CASE("exact evaluation decides strict boundaries that doubles blur") {
  cir::VarTable vars;
  const cir::VarId x = vars.add_real("x");
  // x < 0.1 with x exactly equal to the double 0.1: strictly false, no
  // matter how small a slack a double evaluator would forgive.
  const auto lt = cir::compare(cir::CmpOp::kLt, cir::real_var(x),
                               cir::real_const(0.1));
  exact::Model m(vars.size());
  m.set_real(x, exact::rat_of_double(0.1));
  CHECK_FALSE(exact::eval_bool(lt, m));

  // One ulp less and it holds.
  m.set_real(x, exact::rat_of_double(std::nextafter(0.1, 0.0)));
  CHECK(exact::eval_bool(lt, m));

  // The exact rational 1/10 is below the double 0.1.
  m.set_real(x, exact::Rat(1, 10));
  CHECK(exact::eval_bool(lt, m));
}

TEST_CASE("exact evaluation covers the full connective set") {
  cir::VarTable vars;
  const cir::VarId x = vars.add_real("x");
  const cir::VarId p = vars.add_bool("p");
  exact::Model m(vars.size());
  m.set_real(x, exact::Rat(1, 3));
  m.set_bool(p, true);

  const auto lin = cir::linear_vars({{3.0, x}}, -1.0);
  CHECK(exact::eval_real(lin, m) == exact::Rat(0));  // 3 * (1/3) - 1 = 0 exactly

  const auto eq = cir::compare(cir::CmpOp::kEq, lin, cir::real_const(0.0));
  const auto parity = cir::xor_expr({cir::bool_var(p), cir::bool_const(false),
                                     eq});
  CHECK_FALSE(exact::eval_bool(parity, m));  // two true children: even

  const auto card = cir::cardinality_at_most({cir::bool_var(p), eq}, 1);
  CHECK_FALSE(exact::eval_bool(card, m));

  // double(1/3) rounds below the true third, so the strict bound fails for
  // the exact rational 1/3 -- precisely the call a double evaluator with any
  // slack would get wrong.
  const auto bound = cir::abs_ratio_bound(cir::real_var(x), 1.0 / 3.0);
  CHECK_FALSE(exact::eval_bool(bound, m));
  const auto roomy = cir::abs_ratio_bound(cir::real_var(x), 0.375);
  CHECK(exact::eval_bool(roomy, m));  // |1/3| < 3/8 exactly
  const auto tight = cir::abs_ratio_bound(lin, 0.0);
  CHECK_FALSE(exact::eval_bool(tight, m));  // |0| < 0 is false
}

TEST_CASE("unbound variables throw during exact evaluation") {
  cir::VarTable vars;
  const cir::VarId x = vars.add_real("x");
  exact::Model m(vars.size());
  CHECK(!m.has(x));
  CHECK_THROWS_AS((void)exact::eval_real(cir::real_var(x), m),
                  cir::UnboundVariable);
}

TEST_CASE("first_violation pinpoints the failing assertion") {
  cir::Csp csp;
  const cir::VarId x = csp.vars.add_real("x");
  csp.assert_expr(cir::compare(cir::CmpOp::kGt, cir::real_var(x),
                               cir::real_const(0.0)));
  csp.assert_expr(cir::compare(cir::CmpOp::kLt, cir::real_var(x),
                               cir::real_const(1.0)));

  exact::Model inside(csp.vars.size());
  inside.set_real(x, exact::Rat(1, 3));
  CHECK_FALSE(exact::first_violation(csp, inside).has_value());

  exact::Model above(csp.vars.size());
  above.set_real(x, exact::Rat(2));
  REQUIRE(exact::first_violation(csp, above).has_value());
  CHECK(*exact::first_violation(csp, above) == 1);

  exact::Model below(csp.vars.size());
  below.set_real(x, exact::Rat(-1));
  CHECK(*exact::first_violation(csp, below) == 0);
}

}  // TEST_SUITE
