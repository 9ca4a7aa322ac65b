#include <catch2/catch_amalgamated.hpp>
#include <qcw/cartan.hpp>

using qcw::build_type_c;
using qcw::CartanData;

TEST_CASE("type C Cartan matrix entries", "[cartan]") {
  for (int n = 2; n <= 8; ++n) {
    CartanData cd = build_type_c(n);
    REQUIRE(cd.n == n);
    for (int i = 1; i <= n; ++i) {
      for (int j = 1; j <= n; ++j) {
        int expected;
        if (i == j)
          expected = 2;
        else if (i == n - 1 && j == n)
          expected = -2;
        else if (i - j == 1 || j - i == 1)
          expected = -1;
        else
          expected = 0;
        CAPTURE(n, i, j);
        REQUIRE(cd.cartan(i, j) == expected);
      }
    }
  }
}

TEST_CASE("type C symmetrizers", "[cartan]") {
  for (int n = 2; n <= 8; ++n) {
    CartanData cd = build_type_c(n);
    for (int i = 1; i < n; ++i) REQUIRE(cd.length(i) == 1);
    REQUIRE(cd.length(n) == 2);
  }
}

TEST_CASE("symmetrized form b is symmetric", "[cartan]") {
  for (int n = 2; n <= 8; ++n) {
    CartanData cd = build_type_c(n);
    for (int i = 1; i <= n; ++i)
      for (int j = 1; j <= n; ++j) {
        REQUIRE(cd.b(i, j) == cd.length(i) * cd.cartan(i, j));
        REQUIRE(cd.b(i, j) == cd.b(j, i));
      }
  }
}

TEST_CASE("rank below two is rejected", "[cartan]") {
  REQUIRE_THROWS_AS(build_type_c(1), qcw::InvalidRank);
  REQUIRE_THROWS_AS(build_type_c(0), qcw::InvalidRank);
  REQUIRE_THROWS_AS(build_type_c(-3), qcw::InvalidRank);
}

TEST_CASE("node bounds are enforced", "[cartan]") {
  CartanData cd = build_type_c(3);
  REQUIRE_NOTHROW(cd.check_node(1));
  REQUIRE_NOTHROW(cd.check_node(3));
  REQUIRE_THROWS_AS(cd.check_node(0), qcw::InvalidNode);
  REQUIRE_THROWS_AS(cd.check_node(4), qcw::InvalidNode);
}

TEST_CASE("Cartan data serializes", "[cartan]") {
  CartanData cd = build_type_c(3);
  nlohmann::json j = qcw::to_json(cd);
  REQUIRE(j["rank"] == 3);
  REQUIRE(j["C"].size() == 3);
  REQUIRE(j["C"][1][2] == -2);  // 0-indexed row 1 (node 2), col 2 (node 3)
  REQUIRE(j["C"][2][1] == -1);
  REQUIRE(j["d"] == nlohmann::json::array({1, 1, 2}));
}
