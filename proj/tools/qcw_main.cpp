// Command-line workbench: characters, identity verification suites, duals,
// quiver seeds, mutation schedules, and the character cache.
//
// Output is JSON-first on stdout (compact by default, indented with
// --pretty); errors go to stderr as one JSON object. Exit codes: 0 pass,
// 1 verification failure, 2 usage error, 3 engine error.

#include "qcw/affinization.hpp"
#include "qcw/cluster.hpp"
#include "qcw/qchar.hpp"
#include "qcw/sl2.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

using nlohmann::json;

namespace {

struct GlobalOptions {
  bool pretty = false;
  bool no_cache = false;
  std::int64_t budget = 60'000'000;
  std::string cache_dir;  // empty = environment/default resolution
};

qcw::EngineOptions engine_options(const GlobalOptions& g) {
  qcw::EngineOptions opts;
  opts.use_cache = !g.no_cache;
  opts.budget = g.budget;
  if (!g.cache_dir.empty()) opts.cache = qcw::CharacterCache(g.cache_dir);
  return opts;
}

void emit(const json& j, const GlobalOptions& g) {
  if (g.pretty)
    std::cout << j.dump(2) << "\n";
  else
    std::cout << j.dump() << "\n";
}

[[noreturn]] void fail_usage(const std::string& code, const std::string& message) {
  std::cerr << json{{"error", code}, {"message", message}}.dump() << "\n";
  std::exit(2);
}

std::vector<int> parse_int_csv(const std::string& text) {
  std::vector<int> out;
  std::string cur;
  for (char c : text) {
    if (c == ',') {
      out.push_back(std::stoi(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(std::stoi(cur));
  return out;
}

// Parsed --label value: a module label, a rank-one string request, or a raw
// dominant monomial ("m:<text>").
struct ParsedLabel {
  enum class Kind { Module, Sl2, Raw } kind = Kind::Module;
  qcw::ModuleLabel label;
  int sl2_shift = 0, sl2_length = 0;
  qcw::Monomial monomial;
};

ParsedLabel parse_label(const std::string& text, int n) {
  ParsedLabel out;
  if (text.rfind("m:", 0) == 0) {
    out.kind = ParsedLabel::Kind::Raw;
    out.monomial = qcw::Monomial::from_text(text.substr(2));
    return out;
  }
  std::vector<std::string> parts;
  std::string cur;
  for (char c : text) {
    if (c == ':') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  if (parts.size() != 3)
    throw qcw::InvalidLabel("label must look like 'Variant:s:k1,..,kn', 'sl2:s:k', or 'm:<monomial>', got '" +
                            text + "'");
  int s;
  try {
    s = std::stoi(parts[1]);
  } catch (const std::exception&) {
    throw qcw::ParseError("bad shift in label '" + text + "'");
  }
  if (parts[0] == "sl2") {
    out.kind = ParsedLabel::Kind::Sl2;
    out.sl2_shift = s;
    try {
      out.sl2_length = std::stoi(parts[2]);
    } catch (const std::exception&) {
      throw qcw::ParseError("bad string length in label '" + text + "'");
    }
    if (out.sl2_length < 0) throw qcw::InvalidLabel("string length must be nonnegative");
    return out;
  }
  qcw::LabelVariant variant = qcw::variant_from_name(parts[0]);
  std::vector<int> k;
  try {
    k = parse_int_csv(parts[2]);
  } catch (const std::exception&) {
    throw qcw::ParseError("bad weight vector in label '" + text + "'");
  }
  if (static_cast<int>(k.size()) != n)
    throw qcw::InvalidLabel("label weight vector has " + std::to_string(k.size()) +
                            " entries but rank is " + std::to_string(n));
  out.label = qcw::ModuleLabel{variant, n, s, std::move(k)};
  return out;
}

json character_summary(const qcw::QCharacter& q) {
  return json{{"terms", q.poly.term_count()},
              {"dimension", q.dimension().str()},
              {"special", qcw::is_special(q)},
              {"anti_special", qcw::is_anti_special(q)},
              {"complete", q.complete}};
}

// ---------------------------------------------------------------------------
// cartan
// ---------------------------------------------------------------------------

int cmd_cartan(int n, const GlobalOptions& g) {
  qcw::CartanData cd = qcw::build_type_c(n);
  json j = qcw::to_json(cd);
  json b = json::array();
  for (int i = 1; i <= n; ++i) {
    json row = json::array();
    for (int k = 1; k <= n; ++k) row.push_back(cd.b(i, k));
    b.push_back(row);
  }
  j["symmetrized"] = b;
  emit(j, g);
  return 0;
}

// ---------------------------------------------------------------------------
// hw
// ---------------------------------------------------------------------------

int cmd_hw(int n, const std::string& label_text, const GlobalOptions& g) {
  ParsedLabel p = parse_label(label_text, n);
  json j;
  switch (p.kind) {
    case ParsedLabel::Kind::Module: {
      qcw::CartanData cd = qcw::build_type_c(n);
      j["label"] = p.label.to_json();
      j["highest_weight"] = qcw::highest_weight(cd, p.label).to_text();
      if (p.label.variant == qcw::LabelVariant::S || p.label.variant == qcw::LabelVariant::Stilde) {
        auto [base, partner] = qcw::combined_factors(p.label);
        j["combined_factors"] = json::array({base.to_json(), partner.to_json()});
      }
      break;
    }
    case ParsedLabel::Kind::Sl2: {
      qcw::Sl2String s{p.sl2_shift, p.sl2_length};
      j["label"] = json{{"variant", "sl2"}, {"s", p.sl2_shift}, {"k", p.sl2_length}};
      j["highest_weight"] = (p.sl2_length == 0 ? qcw::Monomial() : s.head()).to_text();
      break;
    }
    case ParsedLabel::Kind::Raw:
      j["highest_weight"] = p.monomial.to_text();
      j["dominant"] = p.monomial.is_dominant();
      break;
  }
  emit(j, g);
  return 0;
}

// ---------------------------------------------------------------------------
// qchar
// ---------------------------------------------------------------------------

int cmd_qchar(int n, const std::string& label_text, const std::string& trunc,
              const GlobalOptions& g) {
  ParsedLabel p = parse_label(label_text, n);
  std::optional<qcw::TruncationRegion> region;
  if (!trunc.empty()) region = qcw::TruncationRegion::from_text(trunc);

  qcw::QCharacter q;
  switch (p.kind) {
    case ParsedLabel::Kind::Sl2: {
      q.rank = 1;
      q.poly = qcw::kr_qchar(p.sl2_shift, p.sl2_length);
      q.highest =
          p.sl2_length == 0 ? qcw::Monomial() : qcw::Sl2String{p.sl2_shift, p.sl2_length}.head();
      break;
    }
    case ParsedLabel::Kind::Raw: {
      qcw::CartanData cd = qcw::build_type_c(n);
      qcw::EngineOptions opts = engine_options(g);
      q = qcw::cached_frenkel_mukhin(cd, p.monomial, region, opts.budget, opts.use_cache,
                                     opts.cache);
      break;
    }
    case ParsedLabel::Kind::Module: {
      qcw::CartanData cd = qcw::build_type_c(n);
      qcw::EngineOptions opts = engine_options(g);
      q.rank = n;
      q.highest = qcw::highest_weight(cd, p.label);
      q.poly = qcw::slot_character(cd, p.label, opts);
      if (region) {
        q.poly = qcw::truncate_to_region(cd, q.poly, q.highest, *region);
        q.truncation = region;
        q.complete = false;
      }
      break;
    }
  }
  json j = q.to_json();
  j["summary"] = character_summary(q);
  emit(j, g);
  return 0;
}

// ---------------------------------------------------------------------------
// dual
// ---------------------------------------------------------------------------

int cmd_dual(int n, const std::string& label_text, const GlobalOptions& g) {
  qcw::CartanData cd = qcw::build_type_c(n);
  ParsedLabel p = parse_label(label_text, n);
  if (p.kind != ParsedLabel::Kind::Module)
    throw qcw::InvalidLabel("dual requires a module label (Variant:s:k1,..,kn)");
  qcw::EngineOptions opts = engine_options(g);
  qcw::ModuleLabel mirror = qcw::mirror_label(p.label);
  qcw::LaurentPoly chi = qcw::slot_character(cd, p.label, opts);
  qcw::LaurentPoly twice = qcw::iota(qcw::iota(chi, n), n);
  json j{{"label", p.label.to_json()},
         {"mirror_label", mirror.to_json()},
         {"direct_side", qcw::direct_side(p.label)},
         {"highest_weight", qcw::highest_weight(cd, p.label).to_text()},
         {"terms", chi.term_count()},
         {"dimension", chi.total().str()},
         {"iota_involution", twice == chi ? "pass" : "fail"}};
  emit(j, g);
  return twice == chi ? 0 : 1;
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

json run_equation_suite(const std::string& name, const std::vector<qcw::EquationInstance>& suite,
                        const qcw::EngineOptions& opts, int jobs, bool& all_pass) {
  json results = json::array();
  std::vector<json> slots(suite.size());
  std::vector<char> passes(suite.size(), 0);

  auto run_one = [&opts](const qcw::EquationInstance& eq) {
    qcw::CartanData cd = qcw::build_type_c(eq.n);
    qcw::VerificationReport rep = qcw::verify_equation(cd, eq, opts);
    return std::make_pair(rep.to_json(), rep.pass && rep.restriction_pass);
  };

  if (jobs <= 1) {
    for (std::size_t i = 0; i < suite.size(); ++i) {
      auto [rep, ok] = run_one(suite[i]);
      slots[i] = std::move(rep);
      passes[i] = ok ? 1 : 0;
    }
  } else {
    // Bounded worker pool; report assembly stays ordered.
    std::size_t next = 0;
    while (next < suite.size()) {
      std::size_t batch = std::min<std::size_t>(static_cast<std::size_t>(jobs), suite.size() - next);
      std::vector<std::future<std::pair<json, bool>>> futs;
      futs.reserve(batch);
      for (std::size_t b = 0; b < batch; ++b)
        futs.push_back(std::async(std::launch::async, run_one, suite[next + b]));
      for (std::size_t b = 0; b < batch; ++b) {
        auto [rep, ok] = futs[b].get();
        slots[next + b] = std::move(rep);
        passes[next + b] = ok ? 1 : 0;
      }
      next += batch;
    }
  }
  for (std::size_t i = 0; i < suite.size(); ++i) {
    results.push_back(slots[i]);
    if (!passes[i]) all_pass = false;
  }
  return json{{"suite", name}, {"results", results}};
}

json run_table1_suite(const qcw::EngineOptions& opts, bool& all_pass) {
  json results = json::array();
  for (const auto& eq : qcw::suite_table1_sample()) {
    qcw::CartanData cd = qcw::build_type_c(eq.n);
    qcw::Table1Report rep = qcw::verify_table1(cd, eq, opts);
    auto census = [](const std::vector<std::pair<qcw::Monomial, qcw::Int>>& v) {
      json a = json::array();
      for (const auto& [m, c] : v) a.push_back({{"m", m.to_text()}, {"c", c.str()}});
      return a;
    };
    results.push_back(json{{"equation", eq.to_json()},
                           {"verdict", rep.pass ? "pass" : "fail"},
                           {"detail", rep.detail},
                           {"predicted", rep.predicted.to_json()},
                           {"dominant_census",
                            {{"lhs", census(rep.lhs_actual)},
                             {"rhs_first", census(rep.rhs_first_actual)},
                             {"rhs_second", census(rep.rhs_second_actual)}}}});
    if (!rep.pass) all_pass = false;
  }
  return json{{"suite", "table1-sample"}, {"results", results}};
}

int cmd_verify(const std::string& suite, const std::string& family, int n, int s,
               const std::string& kcsv, int i, int jnode, const std::string& golden_dir, int jobs,
               const GlobalOptions& g) {
  qcw::EngineOptions opts = engine_options(g);
  bool all_pass = true;
  json report;

  if (!suite.empty()) {
    if (suite == "c3-examples")
      report = run_equation_suite(suite, qcw::suite_c3_examples(), opts, jobs, all_pass);
    else if (suite == "c4-examples")
      report = run_equation_suite(suite, qcw::suite_c4_examples(), opts, jobs, all_pass);
    else if (suite == "c3-dual-examples")
      report = run_equation_suite(suite, qcw::suite_c3_dual_examples(), opts, jobs, all_pass);
    else if (suite == "table1-sample")
      report = run_table1_suite(opts, all_pass);
    else
      fail_usage("ParseError", "unknown suite '" + suite +
                                   "' (expected c3-examples, c4-examples, c3-dual-examples, "
                                   "table1-sample)");
  } else {
    if (family.empty()) fail_usage("ParseError", "verify needs --suite or --family");
    qcw::CartanData cd = qcw::build_type_c(n);
    qcw::EquationInstance eq = qcw::make_equation(family, n, s, parse_int_csv(kcsv), i, jnode);
    qcw::VerificationReport rep = qcw::verify_equation(cd, eq, opts);
    all_pass = rep.pass && rep.restriction_pass;
    report = json{{"suite", "custom"}, {"results", json::array({rep.to_json()})}};
  }
  report["all_pass"] = all_pass;

  // Golden comparison: byte-compare the canonical compact serialization.
  std::string dir = golden_dir;
  if (dir.empty())
    if (const char* env = std::getenv("QCW_GOLDEN_DIR")) dir = env;
  if (!dir.empty() && !suite.empty()) {
    std::filesystem::path path = std::filesystem::path(dir) / (suite + ".json");
    std::ifstream in(path);
    if (!in) throw qcw::ParseError("cannot read golden file " + path.string());
    json golden = json::parse(in);
    bool match = (golden == report);
    report["golden_match"] = match;
    if (!match) all_pass = false;
  }
  emit(report, g);
  return all_pass ? 0 : 1;
}

// ---------------------------------------------------------------------------
// seed / schedule / replay
// ---------------------------------------------------------------------------

int cmd_seed(const std::string& algebra, int n, int depth, bool dot, const GlobalOptions& g) {
  qcw::CartanData cd = qcw::build_type_c(n);
  qcw::Seed seed = qcw::build_initial_seed(qcw::seed_algebra_from_name(algebra), cd, depth);
  if (dot) {
    std::cout << seed.to_graphviz();
    return 0;
  }
  emit(seed.to_json(), g);
  return 0;
}

int cmd_schedule(int case_id, int n, const std::string& kcsv, const GlobalOptions& g) {
  qcw::CartanData cd = qcw::build_type_c(n);
  qcw::MutationSchedule sched = qcw::compile_schedule(case_id, cd, parse_int_csv(kcsv));
  emit(sched.to_json(), g);
  return 0;
}

int cmd_replay(int case_id, int n, const std::string& kcsv, int depth, bool payloads,
               bool no_match, const GlobalOptions& g) {
  qcw::CartanData cd = qcw::build_type_c(n);
  qcw::MutationSchedule sched = qcw::compile_schedule(case_id, cd, parse_int_csv(kcsv));
  int use_depth = depth > 0 ? depth : sched.required_depth;
  if (use_depth < 1) use_depth = 1;

  qcw::MutateOptions opts;
  opts.with_payloads = payloads;
  opts.match_catalog = !no_match;
  opts.check_matched_quotient = payloads;
  opts.check_recognized_quotient = payloads;
  opts.engine = engine_options(g);

  qcw::Seed seed = qcw::build_initial_seed(qcw::SeedAlgebra::A, cd, use_depth);
  qcw::ScheduleRun run = qcw::run_schedule(std::move(seed), sched, opts);

  bool verified = true;
  json records = json::array();
  for (const auto& rec : run.records) {
    if (rec.category == "formal") verified = false;
    if (payloads && (!rec.division_exact ||
                     (rec.quotient_matches_module_character &&
                      !*rec.quotient_matches_module_character)))
      verified = false;
    records.push_back(rec.to_json());
  }
  run.seed.quiver.validate();
  json j{{"schedule", sched.to_json()},
         {"depth", use_depth},
         {"payload_mode", payloads},
         {"records", records},
         {"verified", verified}};
  emit(j, g);
  return verified ? 0 : 1;
}

// ---------------------------------------------------------------------------
// cache
// ---------------------------------------------------------------------------

int cmd_cache(bool clear, const GlobalOptions& g) {
  qcw::CharacterCache cache =
      g.cache_dir.empty() ? qcw::CharacterCache() : qcw::CharacterCache(g.cache_dir);
  std::uintmax_t entries = 0, bytes = 0, removed = 0;
  std::error_code ec;
  if (std::filesystem::exists(cache.dir(), ec)) {
    for (const auto& entry : std::filesystem::directory_iterator(cache.dir(), ec)) {
      if (!entry.is_regular_file()) continue;
      ++entries;
      bytes += entry.file_size();
      if (clear) {
        std::filesystem::remove(entry.path(), ec);
        ++removed;
      }
    }
  }
  json j{{"dir", cache.dir().string()}, {"entries", entries}, {"bytes", bytes}};
  if (clear) j["removed"] = removed;
  emit(j, g);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"q-character workbench for the type-C symmetric tower calculus"};
  app.require_subcommand(1);
  app.fallthrough();  // allow global flags after the subcommand name

  GlobalOptions g;
  app.add_flag("--pretty", g.pretty, "Indent JSON output");
  app.add_flag("--no-cache", g.no_cache, "Bypass the character cache");
  app.add_option("--budget", g.budget, "Expansion step budget")->capture_default_str();
  app.add_option("--cache-dir", g.cache_dir, "Character cache directory (default: QCW_CACHE_DIR)");

  int n = 3;
  std::string label, trunc, suite, family, kcsv, golden_dir, algebra = "A";
  int s = 0, i = 0, jnode = 0, seed_depth = 12, replay_depth = 0, case_id = 1, jobs = 1;
  bool dot = false, payloads = false, no_match = false, clear = false;

  auto* c_cartan = app.add_subcommand("cartan", "Cartan matrix data for type C");
  c_cartan->add_option("--n", n, "Rank")->required();

  auto* c_hw = app.add_subcommand("hw", "Highest weight of a module label");
  c_hw->add_option("--n", n, "Rank")->required();
  c_hw->add_option("--label", label, "Label (Variant:s:k1,..,kn | sl2:s:k | m:<monomial>)")
      ->required();

  auto* c_qchar = app.add_subcommand("qchar", "Compute a q-character");
  c_qchar->add_option("--n", n, "Rank")->required();
  c_qchar->add_option("--label", label, "Label (Variant:s:k1,..,kn | sl2:s:k | m:<monomial>)")
      ->required();
  c_qchar->add_option("--trunc", trunc, "Truncation region, e.g. 's<=0'");

  auto* c_dual = app.add_subcommand("dual", "Mirror label and involution check");
  c_dual->add_option("--n", n, "Rank")->required();
  c_dual->add_option("--label", label, "Module label")->required();

  auto* c_verify = app.add_subcommand("verify", "Verify equation instances or suites");
  c_verify->add_option("--suite", suite,
                       "Suite: c3-examples | c4-examples | c3-dual-examples | table1-sample");
  c_verify->add_option("--family", family, "Equation family for a custom instance");
  c_verify->add_option("--n", n, "Rank");
  c_verify->add_option("--s", s, "Spectral anchor");
  c_verify->add_option("--k", kcsv, "Weight vector, comma separated");
  c_verify->add_option("--i", i, "First node parameter (families that need it)");
  c_verify->add_option("--j", jnode, "Second node parameter (families that need it)");
  c_verify->add_option("--golden-dir", golden_dir,
                       "Compare the report against <dir>/<suite>.json (default: QCW_GOLDEN_DIR)");
  c_verify->add_option("--jobs", jobs, "Worker pool size")->capture_default_str();

  auto* c_seed = app.add_subcommand("seed", "Build an initial quiver seed");
  c_seed->add_option("--algebra", algebra, "Seed family: A | Atilde")->capture_default_str();
  c_seed->add_option("--n", n, "Rank")->required();
  c_seed->add_option("--depth", seed_depth, "Window depth")->required();
  c_seed->add_flag("--dot", dot, "Emit GraphViz instead of JSON");

  auto* c_schedule = app.add_subcommand("schedule", "Compile a mutation schedule");
  c_schedule->add_option("--case", case_id, "Schedule case: 1 | 2")->required();
  c_schedule->add_option("--n", n, "Rank");
  c_schedule->add_option("--k", kcsv, "Weight vector, comma separated")->required();

  auto* c_replay = app.add_subcommand("replay", "Run a schedule and report exchange records");
  c_replay->add_option("--case", case_id, "Schedule case: 1 | 2")->required();
  c_replay->add_option("--n", n, "Rank");
  c_replay->add_option("--k", kcsv, "Weight vector, comma separated")->required();
  c_replay->add_option("--depth", replay_depth, "Window depth (default: schedule minimum)");
  c_replay->add_flag("--payloads", payloads, "Propagate character payloads by exact division");
  c_replay->add_flag("--no-match", no_match, "Skip catalog matching");

  auto* c_cache = app.add_subcommand("cache", "Inspect or clear the character cache");
  c_cache->add_flag("--clear", clear, "Remove all cache entries");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << json{{"error", "ParseError"}, {"message", e.what()}}.dump() << "\n";
    return 2;
  }

  try {
    if (app.got_subcommand(c_cartan)) return cmd_cartan(n, g);
    if (app.got_subcommand(c_hw)) return cmd_hw(n, label, g);
    if (app.got_subcommand(c_qchar)) return cmd_qchar(n, label, trunc, g);
    if (app.got_subcommand(c_dual)) return cmd_dual(n, label, g);
    if (app.got_subcommand(c_verify))
      return cmd_verify(suite, family, n, s, kcsv, i, jnode, golden_dir, jobs, g);
    if (app.got_subcommand(c_seed)) return cmd_seed(algebra, n, seed_depth, dot, g);
    if (app.got_subcommand(c_schedule)) return cmd_schedule(case_id, n, kcsv, g);
    if (app.got_subcommand(c_replay))
      return cmd_replay(case_id, n, kcsv, replay_depth, payloads, no_match, g);
    if (app.got_subcommand(c_cache)) return cmd_cache(clear, g);
    fail_usage("ParseError", "no subcommand given");
  } catch (const qcw::WindowTooSmall& e) {
    std::cerr << json{{"error", e.code()},
                      {"message", e.what()},
                      {"required_depth", e.required_depth()}}
                     .dump()
              << "\n";
    return 3;
  } catch (const qcw::Error& e) {
    std::cerr << json{{"error", e.code()}, {"message", e.what()}}.dump() << "\n";
    const std::string& c = e.code();
    bool usage = c == "ParseError" || c == "InvalidLabel" || c == "InvalidRank" ||
                 c == "InvalidNode" || c == "ConstraintViolated" || c == "Unsupported";
    return usage ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "Internal"}, {"message", e.what()}}.dump() << "\n";
    return 3;
  }
  return 0;
}
