#include <catch2/catch_amalgamated.hpp>
#include <qcw/sl2.hpp>

using qcw::beta;
using qcw::general_position;
using qcw::kr_qchar;
using qcw::LaurentPoly;
using qcw::Monomial;
using qcw::Sl2String;
using qcw::sl2_qchar;
using qcw::string_contains;
using qcw::string_decompose;

TEST_CASE("string members and head", "[sl2]") {
  Sl2String s{0, 3};
  REQUIRE(s.members() == std::vector<int>{-1, 1, 3});
  REQUIRE(s.head() == Monomial::from_text("1_-1 1_1 1_3"));
  REQUIRE(s.bottom() == -1);
  REQUIRE(s.top() == 3);
}

TEST_CASE("ladder characters small cases", "[sl2]") {
  REQUIRE(kr_qchar(0, 0) == LaurentPoly::one());

  LaurentPoly two = kr_qchar(0, 1);
  REQUIRE(two.term_count() == 2);
  REQUIRE(two.coeff(Monomial::from_text("1_-1")) == 1);
  REQUIRE(two.coeff(Monomial::from_text("1_1^-1")) == 1);

  LaurentPoly three = kr_qchar(0, 2);
  REQUIRE(three.term_count() == 3);
  REQUIRE(three.coeff(Monomial::from_text("1_-1 1_1")) == 1);
  REQUIRE(three.coeff(Monomial::from_text("1_-1 1_3^-1")) == 1);
  REQUIRE(three.coeff(Monomial::from_text("1_1^-1 1_3^-1")) == 1);
}

TEST_CASE("ladder character shape", "[sl2]") {
  for (int k = 0; k <= 20; ++k) {
    for (int a : {-3, 0, 5}) {
      LaurentPoly chi = kr_qchar(a, k);
      CAPTURE(a, k);
      REQUIRE(chi.term_count() == static_cast<std::size_t>(k) + 1);
      REQUIRE(chi.total() == k + 1);
      for (const auto& [m, c] : chi.terms()) REQUIRE(c == 1);
    }
  }
}

TEST_CASE("string containment and general position", "[sl2]") {
  Sl2String outer{0, 4};   // members -1,1,3,5
  Sl2String inner{2, 2};   // members 1,3
  REQUIRE(string_contains(outer, inner));
  REQUIRE_FALSE(string_contains(inner, outer));
  REQUIRE(general_position(outer, inner));

  Sl2String left{0, 2};    // members -1,1
  Sl2String right{4, 2};   // members 3,5 - union is one string
  REQUIRE_FALSE(general_position(left, right));

  Sl2String far{8, 1};     // member 7, separated
  REQUIRE(general_position(left, far));

  Sl2String odd{1, 2};     // members 0,2: other parity class
  REQUIRE(general_position(left, odd));
}

TEST_CASE("canonical string decomposition", "[sl2]") {
  // 1_-1 1_1^2 1_3 splits as (length 3) + (length 1) nested strings
  auto strings = string_decompose(Monomial::from_text("1_-1 1_1^2 1_3"));
  REQUIRE(strings.size() == 2);
  REQUIRE(strings[0] == Sl2String{0, 3});
  REQUIRE(strings[1] == Sl2String{2, 1});
  for (std::size_t i = 0; i < strings.size(); ++i)
    for (std::size_t j = i + 1; j < strings.size(); ++j)
      REQUIRE(general_position(strings[i], strings[j]));

  REQUIRE_THROWS_AS(string_decompose(Monomial::from_text("1_0^-1")), qcw::NotDominant);
  REQUIRE_THROWS_AS(string_decompose(Monomial::from_text("1_0 2_1")), qcw::InvalidLabel);
}

TEST_CASE("simple characters multiply over strings", "[sl2]") {
  Monomial m = Monomial::from_text("1_-1 1_3");  // two separated singletons
  LaurentPoly chi = sl2_qchar(m);
  REQUIRE(chi == kr_qchar(0, 1) * kr_qchar(4, 1));
  REQUIRE(chi.total() == 4);

  // a single string of length 2 is not the square of a singleton
  LaurentPoly chain = sl2_qchar(Monomial::from_text("1_-1 1_1"));
  REQUIRE(chain.term_count() == 3);
  REQUIRE(chain.total() == 3);
}

TEST_CASE("node restriction keeps one node and relabels", "[sl2]") {
  LaurentPoly p;
  p.add_term(Monomial::from_text("1_0 2_3^2"), 2);
  p.add_term(Monomial::from_text("2_1^-1 3_0"), 1);
  LaurentPoly b2 = beta(p, 2);
  REQUIRE(b2.coeff(Monomial::from_text("1_3^2")) == 2);
  REQUIRE(b2.coeff(Monomial::from_text("1_1^-1")) == 1);
  // all of node 3's content collapses to the empty monomial
  LaurentPoly b3 = beta(p, 3);
  REQUIRE(b3.coeff(Monomial::from_text("1_0")) == 1);
  REQUIRE(b3.coeff(Monomial()) == 2);
}
