#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <qcw/affinization.hpp>

using qcw::build_type_c;
using qcw::CartanData;
using qcw::combined_factors;
using qcw::EngineOptions;
using qcw::EquationInstance;
using qcw::highest_weight;
using qcw::LabelVariant;
using qcw::make_equation;
using qcw::mirror_label;
using qcw::ModuleLabel;
using qcw::Monomial;
using qcw::parse_label;
using qcw::slot_character;
using qcw::verify_equation;
using qcw::verify_table1;

namespace {
EngineOptions test_engine() {
  EngineOptions opts;
  opts.cache = qcw::CharacterCache(std::filesystem::temp_directory_path() / "qcw-test-cache");
  return opts;
}
}  // namespace

namespace {
bool same_label(const ModuleLabel& a, const ModuleLabel& b) {
  return a.variant == b.variant && a.n == b.n && a.s == b.s && a.k == b.k;
}
}  // namespace

TEST_CASE("label text round trip", "[affinization]") {
  ModuleLabel l = parse_label("T:-2:1,0,2", 3);
  REQUIRE(l.variant == LabelVariant::T);
  REQUIRE(l.s == -2);
  REQUIRE(l.k == std::vector<int>{1, 0, 2});
  REQUIRE(same_label(parse_label(l.to_text(), 3), l));

  ModuleLabel st = parse_label("Stilde:4:1,1,0", 3);
  REQUIRE(st.variant == LabelVariant::Stilde);
  REQUIRE(same_label(parse_label(st.to_text(), 3), st));
}

TEST_CASE("malformed labels are rejected", "[affinization]") {
  REQUIRE_THROWS_AS(parse_label("Q:0:1,0,0", 3), qcw::InvalidLabel);
  REQUIRE_THROWS_AS(parse_label("T:0:1,0", 3), qcw::InvalidLabel);       // wrong arity
  REQUIRE_THROWS_AS(parse_label("T:0:1,0,-1", 3), qcw::InvalidLabel);   // negative weight
  REQUIRE_THROWS_AS(parse_label("T:zero:1,0,0", 3), qcw::InvalidLabel); // bad shift
  REQUIRE_THROWS_AS(parse_label("S:0:1,0,1", 3), qcw::InvalidLabel);    // combined needs k_n = 0
}

TEST_CASE("highest weights of tower labels", "[affinization]") {
  CartanData cd = build_type_c(3);
  REQUIRE(highest_weight(cd, parse_label("T:0:1,1,0", 3)) == Monomial::from_text("1_-4 2_-1"));
  REQUIRE(highest_weight(cd, parse_label("Ttilde:0:1,1,0", 3)) == Monomial::from_text("1_4 2_1"));
  REQUIRE(highest_weight(cd, parse_label("Ttilde:0:0,0,2", 3)) == Monomial::from_text("3_0 3_4"));
  REQUIRE(highest_weight(cd, parse_label("T:0:0,0,2", 3)) == Monomial::from_text("3_-4 3_0"));
  // anchor moves every factor uniformly
  REQUIRE(highest_weight(cd, parse_label("Ttilde:6:0,0,2", 3)) ==
          Monomial::from_text("3_6 3_10"));
  // trivial label
  REQUIRE(highest_weight(cd, parse_label("T:5:0,0,0", 3)) == Monomial());
}

TEST_CASE("combined labels factor into base and shifted partner", "[affinization]") {
  auto [base1, partner1] = combined_factors(parse_label("S:0:1,1,0", 3));
  REQUIRE(same_label(base1, parse_label("T:0:1,1,0", 3)));
  REQUIRE(same_label(partner1, parse_label("T:6:0,0,0", 3)));

  // weight >= 2 before the tail: partner keeps the prefix, two off that weight
  auto [base2, partner2] = combined_factors(parse_label("S:0:3,1,0", 3));
  REQUIRE(same_label(base2, parse_label("T:0:3,1,0", 3)));
  REQUIRE(same_label(partner2, parse_label("T:6:1,0,0", 3)));

  // weight 1 there: one off the previous nonzero weight instead
  auto [base3, partner3] = combined_factors(parse_label("S:0:2,1,1,0", 4));
  REQUIRE(same_label(base3, parse_label("T:0:2,1,1,0", 4)));
  REQUIRE(same_label(partner3, parse_label("T:6:1,0,0,0", 4)));

  CartanData cd = build_type_c(3);
  ModuleLabel s = parse_label("S:0:3,1,0", 3);
  REQUIRE(highest_weight(cd, s) ==
          highest_weight(cd, base2) * highest_weight(cd, partner2));

  REQUIRE_THROWS_AS(combined_factors(parse_label("T:0:1,1,0", 3)), qcw::InvalidLabel);
}

TEST_CASE("mirror is an involution across the variants", "[affinization]") {
  for (const char* text : {"T:0:1,1,0", "Ttilde:-2:0,0,1", "S:4:2,1,0", "Stilde:0:1,1,0"}) {
    ModuleLabel l = parse_label(text, 3);
    REQUIRE(same_label(mirror_label(mirror_label(l)), l));
    REQUIRE(mirror_label(l).variant != l.variant);
    REQUIRE(mirror_label(l).s == l.s);
    REQUIRE(mirror_label(l).k == l.k);
  }
}

TEST_CASE("first equation family slots", "[affinization]") {
  EquationInstance eq = make_equation("eqn1", 3, 0, {2, 1, 0});
  REQUIRE(same_label(eq.lhs1, parse_label("T:0:2,0,0", 3)));
  REQUIRE(same_label(eq.lhs2, parse_label("T:0:2,1,0", 3)));
  REQUIRE(same_label(eq.rhs1a, parse_label("T:0:1,1,0", 3)));
  REQUIRE(same_label(eq.rhs1b, parse_label("T:0:3,0,0", 3)));
  REQUIRE(same_label(eq.rhs2a, parse_label("T:0:0,0,0", 3)));
  REQUIRE(eq.rhs2b.has_value());
  REQUIRE(same_label(*eq.rhs2b, parse_label("T:0:0,3,0", 3)));
}

TEST_CASE("family constraints are enforced", "[affinization]") {
  REQUIRE_THROWS_AS(make_equation("eqn1", 3, 0, {0, 1, 0}), qcw::ConstraintViolated);
  REQUIRE_THROWS_AS(make_equation("eqn1", 3, 0, {1, 1, 1}), qcw::ConstraintViolated);
  REQUIRE_THROWS_AS(make_equation("eqn1", 3, 0, {1, 1}), qcw::ConstraintViolated);
  REQUIRE_THROWS_AS(make_equation("nonsense", 3, 0, {1, 1, 0}), qcw::Unsupported);
  // the two-gap family needs interior room: impossible below rank 5
  REQUIRE_THROWS_AS(make_equation("eqn4", 4, 0, {0, 1, 0, 0}), qcw::ConstraintViolated);
  REQUIRE_NOTHROW(make_equation("eqn4", 5, 0, {0, 1, 0, 1, 0}));
}

TEST_CASE("anchors shift uniformly across the catalog", "[affinization]") {
  struct Probe {
    const char* family;
    int n;
    std::vector<int> k;
  };
  for (const Probe& p : {Probe{"eqn1", 3, {1, 1, 0}}, Probe{"eqn511", 3, {0, 0, 1}},
                         Probe{"eqn5211", 3, {1, 0, 1}}, Probe{"eqn6", 3, {1, 1, 0}},
                         Probe{"eqn5211d", 4, {1, 0, 0, 1}}}) {
    EquationInstance at0 = make_equation(p.family, p.n, 0, p.k);
    EquationInstance at2 = make_equation(p.family, p.n, 2, p.k);
    auto slots = [](const EquationInstance& e) {
      std::vector<ModuleLabel> v{e.lhs1, e.lhs2, e.rhs1a, e.rhs1b, e.rhs2a};
      if (e.rhs2b) v.push_back(*e.rhs2b);
      return v;
    };
    auto a = slots(at0), b = slots(at2);
    REQUIRE(a.size() == b.size());
    for (std::size_t idx = 0; idx < a.size(); ++idx) {
      CAPTURE(p.family, idx);
      REQUIRE(b[idx].s == a[idx].s + 2);
      REQUIRE(b[idx].k == a[idx].k);
      REQUIRE(b[idx].variant == a[idx].variant);
    }
  }
}

TEST_CASE("exact verification of a small identity", "[affinization]") {
  CartanData cd = build_type_c(3);
  EngineOptions opts = test_engine();
  auto rep = verify_equation(cd, make_equation("eqn1", 3, 0, {1, 1, 0}), opts);
  REQUIRE(rep.mode == "full");
  REQUIRE(rep.pass);
  REQUIRE(rep.restriction_pass);
  REQUIRE(rep.residual_terms == 0);
  REQUIRE(rep.lhs_dominants.size() >= 1);
  REQUIRE(rep.lhs_dimension > 0);
}

TEST_CASE("exact verification of a mirrored identity", "[affinization]") {
  CartanData cd = build_type_c(3);
  EngineOptions opts = test_engine();
  auto rep = verify_equation(cd, make_equation("eqn6", 3, 0, {1, 1, 0}), opts);
  REQUIRE(rep.pass);
  REQUIRE(rep.restriction_pass);
}

TEST_CASE("summand census oracle on a small instance", "[affinization]") {
  CartanData cd = build_type_c(3);
  EngineOptions opts = test_engine();
  auto rep = verify_table1(cd, make_equation("eqn1", 3, 0, {1, 1, 0}), opts);
  REQUIRE(rep.pass);
  REQUIRE(rep.lhs_actual.size() == rep.predicted.lhs.size());
}

TEST_CASE("second summands are simple by specialness", "[affinization]") {
  CartanData cd = build_type_c(3);
  EngineOptions opts = test_engine();
  auto rep = qcw::simplicity_census(cd, make_equation("eqn1", 3, 0, {1, 1, 0}), opts);
  REQUIRE(rep.entries.size() == 2);
  REQUIRE(rep.entries[1].summand == "rhs_second");
  REQUIRE(rep.entries[1].verdict == "simple");
}

TEST_CASE("frozen example suites have the printed sizes", "[affinization]") {
  REQUIRE(qcw::suite_c3_examples().size() == 8);
  REQUIRE(qcw::suite_c4_examples().size() == 4);
  REQUIRE(qcw::suite_c3_dual_examples().size() == 11);
  REQUIRE(qcw::suite_table1_sample().size() == 14);
}

TEST_CASE("slot characters respect the mirror involution", "[affinization]") {
  CartanData cd = build_type_c(3);
  EngineOptions opts = test_engine();
  ModuleLabel l = parse_label("T:0:1,0,0", 3);
  qcw::LaurentPoly direct = slot_character(cd, l, opts);
  qcw::LaurentPoly mirrored = slot_character(cd, mirror_label(l), opts);
  REQUIRE(qcw::iota(direct, 3) == mirrored);
  REQUIRE(direct.total() == mirrored.total());
}
