#include <catch2/catch_amalgamated.hpp>
#include <qcw/monomial.hpp>

using qcw::a_monomial;
using qcw::build_type_c;
using qcw::CartanData;
using qcw::decompose_in_a_lattice;
using qcw::leq;
using qcw::Monomial;

TEST_CASE("text round trip", "[monomial]") {
  Monomial m = Monomial::variable(1, 0) * Monomial::variable(2, -3, 2) *
               Monomial::variable(1, 4, -1);
  std::string text = m.to_text();
  REQUIRE(Monomial::from_text(text) == m);
  REQUIRE(Monomial::from_text("1_0 1_-2") ==
          Monomial::variable(1, 0) * Monomial::variable(1, -2));
  REQUIRE(Monomial::from_text(Monomial().to_text()) == Monomial());
}

TEST_CASE("malformed text is rejected", "[monomial]") {
  REQUIRE_THROWS_AS(Monomial::from_text("abc"), qcw::ParseError);
  REQUIRE_THROWS_AS(Monomial::from_text("1_"), qcw::ParseError);
  REQUIRE_THROWS_AS(Monomial::from_text("_3"), qcw::ParseError);
  REQUIRE_THROWS_AS(Monomial::from_text("1_0^"), qcw::ParseError);
}

TEST_CASE("product cancels and inverts", "[monomial]") {
  Monomial a = Monomial::variable(1, 0) * Monomial::variable(2, 1);
  Monomial b = Monomial::variable(1, 0, -1);
  REQUIRE(a * b == Monomial::variable(2, 1));
  REQUIRE(a * a.inverse() == Monomial());
  REQUIRE(a.pow(3) == a * a * a);
  REQUIRE(a.pow(0) == Monomial());
  REQUIRE(a.pow(-1) == a.inverse());
}

TEST_CASE("exponent lookup", "[monomial]") {
  Monomial m = Monomial::from_text("1_0^2 2_-1^-3");
  REQUIRE(m.exponent(1, 0) == 2);
  REQUIRE(m.exponent(2, -1) == -3);
  REQUIRE(m.exponent(3, 5) == 0);
}

TEST_CASE("dominance predicates", "[monomial]") {
  REQUIRE(Monomial::from_text("1_0 2_3^2").is_dominant());
  REQUIRE_FALSE(Monomial::from_text("1_0 2_3^-1").is_dominant());
  REQUIRE(Monomial::from_text("1_0^-1 2_3^-2").is_antidominant());
  REQUIRE(Monomial().is_dominant());
  REQUIRE(Monomial().is_antidominant());
}

TEST_CASE("right negativity", "[monomial]") {
  CartanData cd = build_type_c(3);
  // every inverted simple-root monomial is right-negative
  for (int i = 1; i <= 3; ++i)
    for (int s = -4; s <= 4; ++s) REQUIRE(a_monomial(cd, i, s).inverse().is_right_negative());
  REQUIRE_FALSE(Monomial::from_text("1_0").is_right_negative());
  // rightmost variable carries a positive exponent -> not right-negative
  REQUIRE_FALSE(Monomial::from_text("1_0^-1 1_2").is_right_negative());
}

TEST_CASE("simple root monomials in type C", "[monomial]") {
  CartanData cd = build_type_c(3);
  // interior short node: A_{1,s} = Y_{1,s-1} Y_{1,s+1} Y_{2,s}^{-1}
  REQUIRE(a_monomial(cd, 1, 0) == Monomial::from_text("1_-1 1_1 2_0^-1"));
  // node next to the long node: neighbour exponents follow the Cartan pairing
  REQUIRE(a_monomial(cd, 2, 1) == Monomial::from_text("1_1^-1 2_0 2_2 3_1^-1"));
  // long node: step 2 in the shift and a squared short neighbour
  REQUIRE(a_monomial(cd, 3, 2) == Monomial::from_text("2_1^-1 2_3^-1 3_0 3_4"));
}

TEST_CASE("lattice decomposition round trip", "[monomial]") {
  CartanData cd = build_type_c(3);
  Monomial prod = a_monomial(cd, 1, 0) * a_monomial(cd, 2, 1).pow(2) * a_monomial(cd, 3, 2);
  auto dec = decompose_in_a_lattice(cd, prod);
  REQUIRE(dec.has_value());
  REQUIRE(dec->all_nonnegative());
  REQUIRE(dec->multiplicities.at({1, 0}) == 1);
  REQUIRE(dec->multiplicities.at({2, 1}) == 2);
  REQUIRE(dec->multiplicities.at({3, 2}) == 1);
  REQUIRE(dec->multiplicities.size() == 3);
  // a monomial outside the root lattice has no decomposition
  REQUIRE_FALSE(decompose_in_a_lattice(cd, Monomial::from_text("1_0")).has_value());
}

TEST_CASE("partial order", "[monomial]") {
  CartanData cd = build_type_c(3);
  Monomial top = Monomial::from_text("1_0");
  Monomial below = top * a_monomial(cd, 1, 1).inverse();
  REQUIRE(leq(cd, below, top));
  REQUIRE_FALSE(leq(cd, top, below));
  REQUIRE(leq(cd, top, top));
  // incomparable pair
  REQUIRE_FALSE(leq(cd, Monomial::from_text("1_0"), Monomial::from_text("2_0")));
  REQUIRE_FALSE(leq(cd, Monomial::from_text("2_0"), Monomial::from_text("1_0")));
}

TEST_CASE("shift extremes", "[monomial]") {
  Monomial m = Monomial::from_text("1_-4 2_6^-1 3_0");
  REQUIRE(m.max_shift() == 6);
  REQUIRE(m.min_shift() == -4);
}

TEST_CASE("json round trip", "[monomial]") {
  Monomial m = Monomial::from_text("1_-4^2 2_6^-1 3_0");
  REQUIRE(Monomial::from_json(m.to_json()) == m);
  REQUIRE(Monomial::from_json(Monomial().to_json()) == Monomial());
}
