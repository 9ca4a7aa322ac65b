#pragma once
// Full q-character computation: the iterative highest-weight closure with
// optional truncation, the four-condition truncation certifier, the
// involution swapping highest- and lowest-weight theories, restriction to
// ordinary characters, classification predicates, and a content-addressed
// character cache.

#include "qcw/cartan.hpp"
#include "qcw/core.hpp"
#include "qcw/monomial.hpp"
#include "qcw/polynomial.hpp"
#include "qcw/sl2.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace qcw {

// ---------------------------------------------------------------------------
// Truncation regions: U = I x {s <= bound}.
// ---------------------------------------------------------------------------

struct TruncationRegion {
  int bound = 0;

  static TruncationRegion up_to(int b) { return TruncationRegion{b}; }
  bool contains(int s) const { return s <= bound; }
  bool operator==(const TruncationRegion& o) const { return bound == o.bound; }

  std::string to_text() const { return "s<=" + std::to_string(bound); }

  static TruncationRegion from_text(const std::string& t) {
    if (t.rfind("s<=", 0) != 0) throw ParseError("region must look like 's<=B', got '" + t + "'");
    try {
      return TruncationRegion{std::stoi(t.substr(3))};
    } catch (const std::exception&) {
      throw ParseError("bad region bound in '" + t + "'");
    }
  }

  nlohmann::json to_json() const {
    return nlohmann::json{{"bounded", true}, {"max_shift", bound}};
  }
};

inline nlohmann::json region_to_json(const std::optional<TruncationRegion>& r) {
  if (!r) return nlohmann::json{{"bounded", false}};
  return r->to_json();
}

inline std::optional<TruncationRegion> region_from_json(const nlohmann::json& j) {
  if (!j.value("bounded", false)) return std::nullopt;
  return TruncationRegion{j.at("max_shift").get<int>()};
}

// ---------------------------------------------------------------------------
// QCharacter value.
// ---------------------------------------------------------------------------

struct QCharacter {
  int rank = 0;
  Monomial highest;
  std::optional<TruncationRegion> truncation;
  bool complete = true;  // no monomial was discarded by truncation
  LaurentPoly poly;

  Int dimension() const { return poly.total(); }

  nlohmann::json to_json() const {
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& [m, c] : poly.canonical_terms()) {
      nlohmann::json t{{"m", m.to_json()}};
      if (c >= INT64_MIN && c <= INT64_MAX)
        t["c"] = static_cast<std::int64_t>(c);
      else
        t["c"] = c.str();
      terms.push_back(std::move(t));
    }
    return nlohmann::json{{"rank", rank},
                          {"highest", highest.to_json()},
                          {"terms", terms},
                          {"complete", complete},
                          {"region", region_to_json(truncation)}};
  }

  static QCharacter from_json(const nlohmann::json& j) {
    QCharacter q;
    q.rank = j.value("rank", 0);
    q.highest = Monomial::from_json(j.at("highest"));
    q.truncation = region_from_json(j.at("region"));
    q.complete = j.at("complete").get<bool>();
    for (const auto& t : j.at("terms")) {
      const auto& c = t.at("c");
      q.poly.add_term(Monomial::from_json(t.at("m")),
                      c.is_string() ? Int(c.get<std::string>()) : Int(c.get<std::int64_t>()));
    }
    return q;
  }
};

// ---------------------------------------------------------------------------
// Node expansion: the region-truncated ladder product over one node's slice.
// ---------------------------------------------------------------------------

namespace fm_detail {

/// Multiset of descent anchors (sorted ascending) -> number of rung choices
/// realising it in the ladder product over the node slice of M.
struct NodeExpansion {
  std::map<std::vector<int>, long long> combos;
  bool truncated = false;  // some run was cut to its head by the region
};

/// Expand the node-i slice of an i-dominant monomial into ladder rung combos.
/// A run whose first descent anchor leaves the region contributes only its
/// head (every deeper rung would carry an out-of-region anchor; such
/// monomials are right-negative and are exactly the ones truncation drops).
inline NodeExpansion expand_node(const CartanData& cd, const Monomial& m, int i,
                                 const std::optional<TruncationRegion>& region,
                                 bool include_head) {
  std::map<int, int> exps;
  for (const auto& [k, e] : m.factors()) {
    if (var_node(k) != i) continue;
    if (e < 0) throw NotDominant("node slice has a negative exponent at node " + std::to_string(i));
    exps[var_shift(k)] = e;
  }
  NodeExpansion out;
  out.combos[{}] = 1;
  long long width = 1;
  for (const auto& run : sl2core::decompose(std::move(exps), 2 * cd.d[i])) {
    auto anchors = sl2core::descent_shifts(run);
    int allowed = run.len;
    if (region && !region->contains(anchors.front())) {
      allowed = 0;
      out.truncated = true;
    }
    width *= allowed + 1;
    if (width > 2'000'000)
      throw BudgetExceeded("ladder product too wide at node " + std::to_string(i));
    std::map<std::vector<int>, long long> next;
    for (const auto& [ms, cnt] : out.combos) {
      for (int r = 0; r <= allowed; ++r) {
        std::vector<int> key = ms;
        key.insert(key.end(), anchors.begin(), anchors.begin() + r);
        std::sort(key.begin(), key.end());
        next[std::move(key)] += cnt;
      }
    }
    out.combos = std::move(next);
  }
  if (!include_head) out.combos.erase(std::vector<int>{});
  return out;
}

}  // namespace fm_detail

// ---------------------------------------------------------------------------
// The iterative closure.
// ---------------------------------------------------------------------------

/// Compute the q-character (optionally truncated to the region) of the simple
/// module with highest monomial m_plus. Monomials are finalized in increasing
/// descent depth; a monomial's multiplicity is read off the nodes where it is
/// not dominant (all of which must agree), and each node head expands the
/// region-truncated ladder product of its slice with the head multiplicity
/// left over after interior contributions. Inconsistencies and extra dominant
/// monomials abort with NonSpecialDetected.
inline QCharacter frenkel_mukhin(const CartanData& cd, const Monomial& m_plus,
                                 std::optional<TruncationRegion> region = std::nullopt,
                                 std::int64_t budget = 20'000'000) {
  if (!m_plus.is_dominant())
    throw NotDominant("highest monomial " + m_plus.to_text() + " is not dominant");
  for (const auto& [k, e] : m_plus.factors()) cd.check_node(var_node(k));

  struct Entry {
    int depth = 0;
    std::vector<std::pair<int, Int>> interior;  // node -> interior contribution
  };
  auto interior_of = [](Entry& ent, int i) -> Int& {
    for (auto& [node, v] : ent.interior)
      if (node == i) return v;
    ent.interior.emplace_back(i, 0);
    return ent.interior.back().second;
  };
  auto interior_value = [](const Entry& ent, int i) -> Int {
    for (const auto& [node, v] : ent.interior)
      if (node == i) return v;
    return 0;
  };

  std::unordered_map<Monomial, Entry, MonomialHash> entries;
  std::map<int, std::vector<Monomial>> levels;
  entries.emplace(m_plus, Entry{});
  levels[0].push_back(m_plus);

  QCharacter out;
  out.rank = cd.n;
  out.highest = m_plus;
  out.truncation = region;
  out.complete = true;
  std::int64_t steps = 0;

  while (!levels.empty()) {
    auto lvl = levels.begin();
    std::vector<Monomial> batch = std::move(lvl->second);
    levels.erase(lvl);
    std::sort(batch.begin(), batch.end());
    for (const Monomial& m : batch) {
      Entry& ent = entries.at(m);

      // --- finalize the multiplicity -------------------------------------
      Int coeff;
      if (m == m_plus) {
        coeff = 1;
      } else {
        bool has_negative_node = false;
        bool value_set = false;
        for (int i = 1; i <= cd.n; ++i) {
          if (m.is_node_dominant(i)) continue;
          has_negative_node = true;
          Int vi = interior_value(ent, i);
          if (!value_set) {
            coeff = vi;
            value_set = true;
          } else if (vi != coeff) {
            throw NonSpecialDetected("inconsistent node profiles at " + m.to_text());
          }
        }
        if (!has_negative_node)
          throw NonSpecialDetected("extra dominant monomial " + m.to_text());
        if (coeff < 0)
          throw NonSpecialDetected("negative multiplicity at " + m.to_text());
      }
      if (coeff != 0) out.poly.add_term(m, coeff);

      // --- expand node heads ----------------------------------------------
      for (int i = 1; i <= cd.n; ++i) {
        if (!m.is_node_dominant(i)) continue;
        Int head = coeff - interior_value(ent, i);
        if (head < 0)
          throw NonSpecialDetected("node profile overcount at " + m.to_text());
        if (head == 0 || !m.has_node(i)) continue;
        auto expansion = fm_detail::expand_node(cd, m, i, region, /*include_head=*/false);
        if (expansion.truncated) out.complete = false;
        for (const auto& [anchors, cnt] : expansion.combos) {
          Monomial target = m;
          for (int t : anchors) target = target * a_monomial(cd, i, t).inverse();
          int tdepth = ent.depth + static_cast<int>(anchors.size());
          auto [it, inserted] = entries.try_emplace(target, Entry{});
          if (inserted) {
            it->second.depth = tdepth;
            levels[tdepth].push_back(target);
          } else if (it->second.depth != tdepth) {
            throw Error("Internal", "depth mismatch during closure at " + target.to_text());
          }
          interior_of(it->second, i) += head * cnt;
          if (++steps > budget)
            throw BudgetExceeded("expansion steps exceeded budget " + std::to_string(budget));
        }
      }
      ent.interior.clear();
      ent.interior.shrink_to_fit();
      if (static_cast<std::int64_t>(entries.size()) > budget)
        throw BudgetExceeded("monomial count exceeded budget " + std::to_string(budget));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Truncation of an explicit character, and the Theorem-style certifier.
// ---------------------------------------------------------------------------

/// Keep exactly the terms lying in highest * (A-lattice cone with anchors in
/// the region): the formal truncation of a known character.
inline LaurentPoly truncate_to_region(const CartanData& cd, const LaurentPoly& poly,
                                      const Monomial& highest, const TruncationRegion& region) {
  LaurentPoly out;
  for (const auto& [m, c] : poly.terms()) {
    auto dec = decompose_in_a_lattice(cd, m * highest.inverse());
    if (!dec || !dec->all_nonpositive()) continue;
    bool inside = true;
    for (const auto& [key, mult] : dec->multiplicities) {
      if (!region.contains(key.second)) {
        inside = false;
        break;
      }
    }
    if (inside) out.add_term(m, c);
  }
  return out;
}

/// Outcome of the four-condition truncated-character certification.
struct CertificationReport {
  bool ok = true;
  int failed_condition = 0;  // 1..4 when !ok
  std::string detail;

  explicit operator bool() const { return ok; }
};

/// Literal check of the four conditions guaranteeing that a finite candidate
/// set equals the truncated q-character of m_plus on the region:
///   (i)   every member lies in m_plus times A^{-1} factors anchored in region;
///   (ii)  m_plus is the only dominant member;
///   (iii) if a single A^{-1}_{i,a} step leaves the set, no compensating
///         A_{j,b} step re-enters it except the inverse step itself;
///   (iv)  for every member and node, exactly one node-dominant member's
///         region-truncated ladder product covers it at that node, and every
///         such ladder product stays inside the set with multiplicity one.
inline CertificationReport certify_truncation(const CartanData& cd, const Monomial& m_plus,
                                              const TruncationRegion& region,
                                              const std::vector<Monomial>& candidate) {
  CertificationReport rep;
  auto fail = [&rep](int cond, std::string detail) {
    rep.ok = false;
    rep.failed_condition = cond;
    rep.detail = std::move(detail);
    return rep;
  };

  std::unordered_map<Monomial, int, MonomialHash> index;
  for (std::size_t idx = 0; idx < candidate.size(); ++idx) {
    if (!index.emplace(candidate[idx], static_cast<int>(idx)).second)
      return fail(1, "candidate contains a repeated monomial " + candidate[idx].to_text());
  }
  if (index.find(m_plus) == index.end())
    return fail(2, "candidate does not contain the highest monomial");

  // (i) membership in the region-anchored cone below m_plus.
  for (const auto& m : candidate) {
    auto dec = decompose_in_a_lattice(cd, m * m_plus.inverse());
    if (!dec || !dec->all_nonpositive())
      return fail(1, m.to_text() + " does not lie below the highest monomial");
    for (const auto& [key, mult] : dec->multiplicities)
      if (!region.contains(key.second))
        return fail(1, m.to_text() + " uses an out-of-region step at shift " +
                           std::to_string(key.second));
  }

  // (ii) unique dominant member.
  for (const auto& m : candidate)
    if (m.is_dominant() && m != m_plus)
      return fail(2, "second dominant member " + m.to_text());

  // (iii) single-step boundary: examine pairs differing by A_{j,b} A^{-1}_{i,a}.
  for (const auto& m : candidate) {
    for (const auto& m2 : candidate) {
      if (m == m2) continue;
      auto dec = decompose_in_a_lattice(cd, m2 * m.inverse());
      if (!dec || dec->multiplicities.size() != 2) continue;
      auto it = dec->multiplicities.begin();
      auto [ka, ca] = *it;
      auto [kb, cb] = *std::next(it);
      if (!((ca == 1 && cb == -1) || (ca == -1 && cb == 1))) continue;
      auto neg = (ca == -1) ? ka : kb;  // m2 = m * A^{-1}_{neg} * A_{pos}
      if (!region.contains(neg.second)) continue;
      Monomial stepped = m * a_monomial(cd, neg.first, neg.second).inverse();
      if (index.find(stepped) == index.end())
        return fail(3, "step A^{-1}_{" + std::to_string(neg.first) + "," +
                           std::to_string(neg.second) + "} from " + m.to_text() +
                           " leaves the set yet re-enters at " + m2.to_text());
    }
  }

  // (iv) unique node-dominant cover at every node.
  for (int i = 1; i <= cd.n; ++i) {
    std::vector<int> cover(candidate.size(), 0);
    for (const auto& m : candidate) {
      if (!m.is_node_dominant(i)) continue;
      auto expansion = fm_detail::expand_node(cd, m, i, region, /*include_head=*/true);
      for (const auto& [anchors, cnt] : expansion.combos) {
        Monomial target = m;
        for (int t : anchors) target = target * a_monomial(cd, i, t).inverse();
        auto it = index.find(target);
        if (it == index.end())
          return fail(4, "ladder of " + m.to_text() + " at node " + std::to_string(i) +
                             " exits the set at " + target.to_text());
        if (cnt != 1)
          return fail(4, "ladder of " + m.to_text() + " at node " + std::to_string(i) +
                             " hits " + target.to_text() + " with multiplicity " +
                             std::to_string(cnt));
        cover[static_cast<std::size_t>(it->second)] += static_cast<int>(cnt);
      }
    }
    for (std::size_t idx = 0; idx < candidate.size(); ++idx) {
      if (cover[idx] != 1)
        return fail(4, candidate[idx].to_text() + " is covered " + std::to_string(cover[idx]) +
                           " times at node " + std::to_string(i));
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Classification predicates.
// ---------------------------------------------------------------------------

inline std::vector<std::pair<Monomial, Int>> enumerate_dominant(const LaurentPoly& p) {
  std::vector<std::pair<Monomial, Int>> out;
  for (const auto& [m, c] : p.terms())
    if (m.is_dominant()) out.emplace_back(m, c);
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

inline std::vector<std::pair<Monomial, Int>> enumerate_antidominant(const LaurentPoly& p) {
  std::vector<std::pair<Monomial, Int>> out;
  for (const auto& [m, c] : p.terms())
    if (m.is_antidominant()) out.emplace_back(m, c);
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

inline bool is_special(const QCharacter& q) {
  std::size_t count = enumerate_dominant(q.poly).size();
  if (!q.complete && count <= 1)
    throw IncompleteCharacter("truncation discarded monomials; unique dominant in region is not definitive");
  return count == 1;
}

inline bool is_anti_special(const QCharacter& q) {
  std::size_t count = enumerate_antidominant(q.poly).size();
  if (!q.complete && count <= 1)
    throw IncompleteCharacter("truncation discarded monomials; unique anti-dominant in region is not definitive");
  return count == 1;
}

// ---------------------------------------------------------------------------
// The involution and restriction.
// ---------------------------------------------------------------------------

/// Ring homomorphism Y_{i,s} -> Y_{i, 2n+2-s}^{-1}; an involution exchanging
/// dominant and anti-dominant monomials (and the two label families).
inline Monomial iota(const Monomial& m, int n) {
  std::vector<Monomial::Factor> fs;
  fs.reserve(m.size());
  for (const auto& [k, e] : m.factors())
    fs.emplace_back(var_key(var_node(k), 2 * n + 2 - var_shift(k)), -e);
  return Monomial::from_factors(std::move(fs));
}

inline LaurentPoly iota(const LaurentPoly& p, int n) {
  LaurentPoly out;
  for (const auto& [m, c] : p.terms()) out.add_term(iota(m, n), c);
  return out;
}

/// Forget the spectral parameter: Y_{i,s} -> y_i (kept as shift-0 variables).
inline Monomial restrict_monomial(const Monomial& m) {
  std::vector<Monomial::Factor> fs;
  fs.reserve(m.size());
  for (const auto& [k, e] : m.factors()) fs.emplace_back(var_key(var_node(k), 0), e);
  return Monomial::from_factors(std::move(fs));
}

inline LaurentPoly restrict_character(const LaurentPoly& p) {
  LaurentPoly out;
  for (const auto& [m, c] : p.terms()) out.add_term(restrict_monomial(m), c);
  return out;
}

// ---------------------------------------------------------------------------
// Content-addressed character cache.
// ---------------------------------------------------------------------------

class CharacterCache {
 public:
  static std::filesystem::path default_dir() {
    if (const char* env = std::getenv("QCW_CACHE_DIR")) return env;
    if (const char* home = std::getenv("HOME"))
      return std::filesystem::path(home) / ".cache" / "qcw";
    return std::filesystem::path(".qcw-cache");
  }

  explicit CharacterCache(std::filesystem::path dir = default_dir()) : dir_(std::move(dir)) {}

  const std::filesystem::path& dir() const { return dir_; }

  static std::string key(const CartanData& cd, const Monomial& m_plus,
                         const std::optional<TruncationRegion>& region) {
    std::string text = "qchar/v1|";
    nlohmann::json jc = qcw::to_json(cd);
    text += jc.dump();
    text += '|';
    text += m_plus.to_text();
    text += '|';
    text += region ? region->to_text() : std::string("all");
    std::uint64_t h = fnv1a(text.data(), text.size());
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }

  // Entries are stored in a line-oriented text format and streamed in both
  // directions: characters can run to millions of terms, so neither load nor
  // store may ever hold a serialized copy (or a JSON DOM) in memory.
  std::optional<QCharacter> load(const std::string& key) const {
    std::filesystem::path p = dir_ / (key + ".qch");
    std::ifstream in(p);
    if (!in) return std::nullopt;
    try {
      std::string magic;
      int version = 0;
      if (!(in >> magic >> version) || magic != "qcwchar" || version != 1) return std::nullopt;
      QCharacter q;
      std::string tag, rest;
      std::size_t n_terms = 0;
      if (!(in >> tag >> q.rank) || tag != "rank") return std::nullopt;
      if (!(in >> tag) || tag != "highest") return std::nullopt;
      std::getline(in, rest);
      q.highest = Monomial::from_text(rest);
      if (!(in >> tag) || tag != "region") return std::nullopt;
      std::getline(in, rest);
      rest.erase(0, rest.find_first_not_of(' '));
      q.truncation = (rest == "all") ? std::nullopt
                                     : std::optional<TruncationRegion>(TruncationRegion::from_text(rest));
      int complete_flag = 1;
      if (!(in >> tag >> complete_flag) || tag != "complete") return std::nullopt;
      q.complete = complete_flag != 0;
      if (!(in >> tag >> n_terms) || tag != "terms") return std::nullopt;
      std::string coeff;
      for (std::size_t idx = 0; idx < n_terms; ++idx) {
        if (!(in >> coeff)) return std::nullopt;
        std::getline(in, rest);
        q.poly.add_term(Monomial::from_text(rest), Int(coeff));
      }
      if (q.poly.term_count() != n_terms) return std::nullopt;  // duplicate/cancelling lines
      return q;
    } catch (const std::exception&) {
      return std::nullopt;  // unreadable entries are treated as misses
    }
  }

  void store(const std::string& key, const QCharacter& q) const {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    std::filesystem::path final_path = dir_ / (key + ".qch");
    static std::atomic<unsigned> temp_seq{0};
    std::filesystem::path tmp =
        dir_ / (key + ".tmp." + std::to_string(std::random_device{}()) + "." +
                std::to_string(temp_seq.fetch_add(1)));
    {
      std::ofstream out(tmp);
      if (!out) return;  // cache is best-effort
      out << "qcwchar 1\n";
      out << "rank " << q.rank << '\n';
      out << "highest " << q.highest.to_text() << '\n';
      out << "region " << (q.truncation ? q.truncation->to_text() : std::string("all")) << '\n';
      out << "complete " << (q.complete ? 1 : 0) << '\n';
      out << "terms " << q.poly.term_count() << '\n';
      for (const auto& [m, c] : q.poly.terms()) out << c.str() << ' ' << m.to_text() << '\n';
      if (!out) {  // disk-full etc.: drop the partial temp file
        out.close();
        std::filesystem::remove(tmp, ec);
        return;
      }
    }
    std::filesystem::rename(tmp, final_path, ec);
    if (ec) std::filesystem::remove(tmp, ec);
  }

  std::size_t entry_count() const {
    std::error_code ec;
    std::size_t n = 0;
    for (auto it = std::filesystem::directory_iterator(dir_, ec);
         !ec && it != std::filesystem::directory_iterator(); ++it)
      if (it->path().extension() == ".qch") ++n;
    return n;
  }

  std::size_t clear() const {
    std::error_code ec;
    std::size_t n = 0;
    for (auto it = std::filesystem::directory_iterator(dir_, ec);
         !ec && it != std::filesystem::directory_iterator(); ++it) {
      auto ext = it->path().extension();
      if ((ext == ".qch" || ext == ".json") && std::filesystem::remove(it->path(), ec)) ++n;
    }
    return n;
  }

 private:
  std::filesystem::path dir_;
};

/// Cache-aware front end to the closure; `use_cache=false` bypasses entirely.
inline QCharacter cached_frenkel_mukhin(const CartanData& cd, const Monomial& m_plus,
                                        std::optional<TruncationRegion> region = std::nullopt,
                                        std::int64_t budget = 20'000'000, bool use_cache = true,
                                        const CharacterCache& cache = CharacterCache()) {
  std::string key;
  if (use_cache) {
    key = CharacterCache::key(cd, m_plus, region);
    if (auto hit = cache.load(key)) return *hit;
  }
  QCharacter q = frenkel_mukhin(cd, m_plus, region, budget);
  if (use_cache) cache.store(key, q);
  return q;
}

}  // namespace qcw
