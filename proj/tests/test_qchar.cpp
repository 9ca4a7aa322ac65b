#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <qcw/qchar.hpp>

using qcw::build_type_c;
using qcw::cached_frenkel_mukhin;
using qcw::CartanData;
using qcw::certify_truncation;
using qcw::CharacterCache;
using qcw::enumerate_dominant;
using qcw::frenkel_mukhin;
using qcw::iota;
using qcw::LaurentPoly;
using qcw::Monomial;
using qcw::QCharacter;
using qcw::restrict_character;
using qcw::truncate_to_region;
using qcw::TruncationRegion;

TEST_CASE("fundamental characters have the classical dimensions", "[qchar]") {
  CartanData c2 = build_type_c(2);
  REQUIRE(frenkel_mukhin(c2, Monomial::variable(1, 0)).dimension() == 4);
  REQUIRE(frenkel_mukhin(c2, Monomial::variable(2, 0)).dimension() == 5);

  CartanData c3 = build_type_c(3);
  REQUIRE(frenkel_mukhin(c3, Monomial::variable(1, 0)).dimension() == 6);
  REQUIRE(frenkel_mukhin(c3, Monomial::variable(2, 0)).dimension() == 14);
  REQUIRE(frenkel_mukhin(c3, Monomial::variable(3, 0)).dimension() == 14);
}

TEST_CASE("fundamental characters are special and anti-special", "[qchar]") {
  CartanData cd = build_type_c(3);
  for (int i = 1; i <= 3; ++i) {
    QCharacter q = frenkel_mukhin(cd, Monomial::variable(i, 0));
    CAPTURE(i);
    REQUIRE(q.complete);
    REQUIRE(qcw::is_special(q));
    REQUIRE(qcw::is_anti_special(q));
    auto dom = enumerate_dominant(q.poly);
    REQUIRE(dom.size() == 1);
    REQUIRE(dom[0].first == Monomial::variable(i, 0));
    REQUIRE(dom[0].second == 1);
  }
}

TEST_CASE("non-dominant head is rejected", "[qchar]") {
  CartanData cd = build_type_c(2);
  REQUIRE_THROWS_AS(frenkel_mukhin(cd, Monomial::from_text("1_0^-1")), qcw::NotDominant);
}

TEST_CASE("truncated expansion equals truncation of the full character", "[qchar]") {
  CartanData cd = build_type_c(3);
  Monomial head = Monomial::from_text("3_0 2_5");
  TruncationRegion region{5};
  QCharacter full = frenkel_mukhin(cd, head);
  QCharacter trunc = frenkel_mukhin(cd, head, region);
  REQUIRE_FALSE(trunc.complete);
  REQUIRE(trunc.poly == truncate_to_region(cd, full.poly, head, region));
  REQUIRE(trunc.poly.term_count() < full.poly.term_count());
}

TEST_CASE("truncation region text forms", "[qchar]") {
  TruncationRegion r = TruncationRegion::from_text("s<=7");
  REQUIRE(r.bound == 7);
  REQUIRE(r.contains(7));
  REQUIRE_FALSE(r.contains(8));
  REQUIRE_THROWS_AS(TruncationRegion::from_text("s>=7"), qcw::ParseError);
  REQUIRE_THROWS_AS(TruncationRegion::from_text("nonsense"), qcw::ParseError);
}

TEST_CASE("ladder certification accepts the true set and rejects others", "[qchar]") {
  CartanData cd = build_type_c(3);
  // tower on the long node: head 3_0 3_4, region bound 7
  Monomial head = Monomial::from_text("3_0 3_4");
  TruncationRegion region{7};
  std::vector<Monomial> ladder = {head, head * qcw::a_monomial(cd, 3, 6).inverse(),
                                  head * qcw::a_monomial(cd, 3, 6).inverse() *
                                      qcw::a_monomial(cd, 3, 2).inverse()};
  auto ok = certify_truncation(cd, head, region, ladder);
  REQUIRE(ok.ok);

  // dropping the last rung breaks the ladder-cover condition
  std::vector<Monomial> short_ladder = {ladder[0], ladder[1]};
  auto bad = certify_truncation(cd, head, region, short_ladder);
  REQUIRE_FALSE(bad.ok);
  REQUIRE(bad.failed_condition == 4);

  // a set missing the head fails outright
  std::vector<Monomial> headless = {ladder[1], ladder[2]};
  REQUIRE_FALSE(certify_truncation(cd, head, region, headless).ok);

  // certified set equals the actual truncated character support
  LaurentPoly tr = truncate_to_region(cd, frenkel_mukhin(cd, head).poly, head, region);
  REQUIRE(tr.term_count() == ladder.size());
  for (const auto& m : ladder) REQUIRE(tr.coeff(m) == 1);
}

TEST_CASE("involution is an involution and flips dominance", "[qchar]") {
  CartanData cd = build_type_c(3);
  QCharacter q = frenkel_mukhin(cd, Monomial::from_text("1_0 2_3"));
  LaurentPoly image = iota(q.poly, 3);
  REQUIRE(iota(image, 3) == q.poly);
  // the highest (dominant) monomial maps to an anti-dominant one
  REQUIRE(iota(q.highest, 3).is_antidominant());
  REQUIRE(image.total() == q.poly.total());
}

TEST_CASE("forgetting the spectral parameter preserves dimension", "[qchar]") {
  CartanData cd = build_type_c(3);
  QCharacter q = frenkel_mukhin(cd, Monomial::variable(2, 0));
  LaurentPoly r = restrict_character(q.poly);
  REQUIRE(r.total() == q.poly.total());
  for (const auto& [m, c] : r.terms())
    for (const auto& [k, e] : m.factors()) REQUIRE(qcw::var_shift(k) == 0);
}

TEST_CASE("character cache round trip", "[qchar]") {
  CartanData cd = build_type_c(3);
  std::filesystem::path dir =
      std::filesystem::temp_directory_path() / "qcw-test-cache-roundtrip";
  std::filesystem::remove_all(dir);
  CharacterCache cache(dir);

  Monomial head = Monomial::from_text("1_0 2_3");
  QCharacter direct = frenkel_mukhin(cd, head);
  QCharacter first = cached_frenkel_mukhin(cd, head, std::nullopt, 20'000'000, true, cache);
  REQUIRE(first.poly == direct.poly);
  // second call must hit the file written by the first
  std::uintmax_t files = std::distance(std::filesystem::directory_iterator(dir),
                                       std::filesystem::directory_iterator{});
  REQUIRE(files >= 1);
  QCharacter second = cached_frenkel_mukhin(cd, head, std::nullopt, 20'000'000, true, cache);
  REQUIRE(second.poly == direct.poly);
  REQUIRE(second.highest == direct.highest);
  REQUIRE(second.complete == direct.complete);
  std::filesystem::remove_all(dir);
}

TEST_CASE("character json round trip", "[qchar]") {
  CartanData cd = build_type_c(2);
  QCharacter q = frenkel_mukhin(cd, Monomial::from_text("1_0 2_1"));
  QCharacter back = QCharacter::from_json(q.to_json());
  REQUIRE(back.poly == q.poly);
  REQUIRE(back.highest == q.highest);
  REQUIRE(back.rank == q.rank);
  REQUIRE(back.complete == q.complete);
}

TEST_CASE("expansion budget is enforced", "[qchar]") {
  CartanData cd = build_type_c(3);
  REQUIRE_THROWS_AS(frenkel_mukhin(cd, Monomial::from_text("1_0 2_3"), std::nullopt, 10),
                    qcw::BudgetExceeded);
}
