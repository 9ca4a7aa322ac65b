#pragma once
// Finite-window quiver seeds over the half-plane vertex lattice, column-
// organised mutation schedules, classification of exchange records against
// the equation catalog, and character-payload propagation by exact division.

#include "qcw/affinization.hpp"
#include "qcw/cartan.hpp"
#include "qcw/core.hpp"
#include "qcw/monomial.hpp"
#include "qcw/polynomial.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace qcw {

// ---------------------------------------------------------------------------
// Vertex lattice.
// ---------------------------------------------------------------------------

struct QuiverVertex {
  int node = 0;
  int row = 0;

  bool operator==(const QuiverVertex& o) const { return node == o.node && row == o.row; }
  bool operator!=(const QuiverVertex& o) const { return !(*this == o); }
  bool operator<(const QuiverVertex& o) const {
    return node != o.node ? node < o.node : row < o.row;
  }

  std::string to_text() const {
    return "(" + std::to_string(node) + "," + std::to_string(row) + ")";
  }
  nlohmann::json to_json() const { return nlohmann::json{{"node", node}, {"row", row}}; }
  static QuiverVertex from_json(const nlohmann::json& j) {
    return QuiverVertex{j.at("node").get<int>(), j.at("row").get<int>()};
  }
};

/// The two seed families: A carries plain towers below the axis at nodes
/// < n and ascending towers at node n; Atilde is its reflection above the
/// axis with all arrows reversed.
enum class SeedAlgebra { A, Atilde };

inline std::string seed_algebra_name(SeedAlgebra a) {
  return a == SeedAlgebra::A ? "A" : "Atilde";
}
inline SeedAlgebra seed_algebra_from_name(const std::string& s) {
  if (s == "A" || s == "a") return SeedAlgebra::A;
  if (s == "Atilde" || s == "atilde" || s == "A~") return SeedAlgebra::Atilde;
  throw ParseError("unknown seed algebra '" + s + "' (expected A or Atilde)");
}

/// Membership in the infinite vertex set: rows on one side of the axis with
/// row parity equal to node parity flipped (odd nodes sit on even rows).
inline bool vertex_in_lattice(SeedAlgebra alg, const CartanData& cd, int node, int row) {
  if (node < 1 || node > cd.n) return false;
  bool row_even_needed = (node % 2 == 1);
  if ((((row % 2) + 2) % 2 == 0) != row_even_needed) return false;
  return alg == SeedAlgebra::A ? row <= 0 : row >= 0;
}

/// Arrow targets of (i,r) in the infinite quiver: for each j with b_ij != 0
/// (including j = i) the target row is r + (b_ij - d_i + d_j), negated on the
/// reflected family.
inline std::vector<QuiverVertex> lattice_arrow_targets(SeedAlgebra alg, const CartanData& cd,
                                                       const QuiverVertex& v) {
  std::vector<QuiverVertex> out;
  int sign = alg == SeedAlgebra::A ? 1 : -1;
  for (int j = 1; j <= cd.n; ++j) {
    int b = cd.b(v.node, j);
    if (b == 0) continue;
    int row = v.row + sign * (b - cd.d[v.node] + cd.d[j]);
    if (vertex_in_lattice(alg, cd, j, row)) out.push_back(QuiverVertex{j, row});
  }
  return out;
}

/// All infinite-quiver neighbours (sources and targets) of v.
inline std::vector<QuiverVertex> lattice_neighbors(SeedAlgebra alg, const CartanData& cd,
                                                   const QuiverVertex& v) {
  std::vector<QuiverVertex> out = lattice_arrow_targets(alg, cd, v);
  int sign = alg == SeedAlgebra::A ? 1 : -1;
  for (int j = 1; j <= cd.n; ++j) {
    int b = cd.b(j, v.node);
    if (b == 0) continue;
    QuiverVertex src{j, v.row - sign * (b - cd.d[j] + cd.d[v.node])};
    if (vertex_in_lattice(alg, cd, j, src.row)) out.push_back(src);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Quiver: vertices plus an arrow multiset, mutated by the standard local rule.
// ---------------------------------------------------------------------------

class Quiver {
 public:
  using Arrow = std::pair<QuiverVertex, QuiverVertex>;

  std::vector<QuiverVertex> vertices;         // sorted, unique
  std::map<Arrow, int> arrows;                // multiplicity >= 1

  bool has_vertex(const QuiverVertex& v) const {
    return std::binary_search(vertices.begin(), vertices.end(), v);
  }

  void add_vertex(const QuiverVertex& v) {
    auto it = std::lower_bound(vertices.begin(), vertices.end(), v);
    if (it == vertices.end() || *it != v) vertices.insert(it, v);
  }

  void add_arrow(const QuiverVertex& a, const QuiverVertex& b, int mult = 1) {
    if (mult == 0) return;
    if (a == b) throw Error("InvalidQuiver", "arrow loop at " + a.to_text());
    auto [it, inserted] = arrows.try_emplace({a, b}, mult);
    if (!inserted) it->second += mult;
    if (it->second == 0) arrows.erase(it);
  }

  int arrow_count(const QuiverVertex& a, const QuiverVertex& b) const {
    auto it = arrows.find({a, b});
    return it == arrows.end() ? 0 : it->second;
  }

  std::vector<std::pair<QuiverVertex, int>> in_of(const QuiverVertex& v) const {
    std::vector<std::pair<QuiverVertex, int>> out;
    for (const auto& [e, m] : arrows)
      if (e.second == v) out.emplace_back(e.first, m);
    return out;
  }
  std::vector<std::pair<QuiverVertex, int>> out_of(const QuiverVertex& v) const {
    std::vector<std::pair<QuiverVertex, int>> out;
    for (const auto& [e, m] : arrows)
      if (e.first == v) out.emplace_back(e.second, m);
    return out;
  }

  /// Standard quiver mutation at v: compose through v, reverse the arrows at
  /// v, and cancel the two-cycles created by composition.
  void mutate_at(const QuiverVertex& v) {
    auto ins = in_of(v);
    auto outs = out_of(v);
    for (const auto& [a, m] : ins) arrows.erase({a, v});
    for (const auto& [b, m] : outs) arrows.erase({v, b});
    for (const auto& [a, m1] : ins)
      for (const auto& [b, m2] : outs) add_arrow(a, b, m1 * m2);
    for (const auto& [a, m] : ins) add_arrow(v, a, m);
    for (const auto& [b, m] : outs) add_arrow(b, v, m);
    cancel_two_cycles();
  }

  /// Throws when a loop, a two-cycle, a nonpositive multiplicity, or a
  /// dangling endpoint is present.
  void validate() const {
    for (const auto& [e, m] : arrows) {
      if (m <= 0) throw Error("InvalidQuiver", "nonpositive arrow multiplicity");
      if (e.first == e.second) throw Error("InvalidQuiver", "loop at " + e.first.to_text());
      if (arrows.count({e.second, e.first}))
        throw Error("InvalidQuiver",
                    "two-cycle between " + e.first.to_text() + " and " + e.second.to_text());
      if (!has_vertex(e.first) || !has_vertex(e.second))
        throw Error("InvalidQuiver", "arrow endpoint outside the vertex set");
    }
  }

  nlohmann::json to_json() const {
    nlohmann::json vs = nlohmann::json::array();
    for (const auto& v : vertices) vs.push_back(v.to_json());
    nlohmann::json as = nlohmann::json::array();
    for (const auto& [e, m] : arrows)
      as.push_back({{"from", e.first.to_json()}, {"to", e.second.to_json()}, {"mult", m}});
    return nlohmann::json{{"vertices", vs}, {"arrows", as}};
  }

 private:
  void cancel_two_cycles() {
    std::vector<std::pair<Arrow, int>> cuts;
    for (const auto& [e, m] : arrows) {
      if (e.second < e.first) continue;  // visit each unordered pair once
      auto rev = arrows.find({e.second, e.first});
      if (rev == arrows.end()) continue;
      cuts.emplace_back(e, std::min(m, rev->second));
    }
    for (const auto& [e, c] : cuts) {
      add_arrow(e.first, e.second, -c);
      add_arrow(e.second, e.first, -c);
    }
  }
};

// ---------------------------------------------------------------------------
// Cluster variables and seeds.
// ---------------------------------------------------------------------------

struct ClusterVar {
  std::optional<ModuleLabel> label;  // recognised module form, when one exists
  Monomial hw;                       // ground truth: the variable's top monomial
  std::string name;                  // display name (label text, or a formal symbol)
  std::shared_ptr<const LaurentPoly> payload;  // materialised character, payload mode

  nlohmann::json to_json() const {
    nlohmann::json j{{"name", name}, {"hw", hw.to_text()}};
    if (label) j["label"] = label->to_json();
    if (payload) j["payload_terms"] = payload->term_count();
    return j;
  }
};

struct Seed {
  SeedAlgebra algebra = SeedAlgebra::A;
  CartanData cd;
  int depth = 0;  // window: vertices with |row| <= depth
  Quiver quiver;
  std::map<QuiverVertex, ClusterVar> vars;
  long mutation_count = 0;

  const ClusterVar& var_at(const QuiverVertex& v) const {
    auto it = vars.find(v);
    if (it == vars.end()) throw InvalidNode("no variable at vertex " + v.to_text());
    return it->second;
  }

  /// True when every infinite-quiver neighbour of v lies inside the window.
  bool interior(const QuiverVertex& v) const {
    if (!quiver.has_vertex(v)) return false;
    for (const auto& u : lattice_neighbors(algebra, cd, v))
      if (!quiver.has_vertex(u)) return false;
    return true;
  }

  nlohmann::json to_json(bool with_vars = true) const {
    nlohmann::json j{{"algebra", seed_algebra_name(algebra)},
                     {"n", cd.n},
                     {"depth", depth},
                     {"mutations", mutation_count},
                     {"quiver", quiver.to_json()}};
    if (with_vars) {
      nlohmann::json vs = nlohmann::json::array();
      for (const auto& [v, var] : vars) {
        nlohmann::json e = var.to_json();
        e["vertex"] = v.to_json();
        vs.push_back(std::move(e));
      }
      j["variables"] = vs;
    }
    return j;
  }

  std::string to_graphviz() const {
    std::ostringstream os;
    os << "digraph seed {\n  rankdir=TB;\n  node [shape=box, fontsize=10];\n";
    for (const auto& v : quiver.vertices) {
      auto it = vars.find(v);
      os << "  \"" << v.node << "," << v.row << "\" [label=\"" << v.to_text();
      if (it != vars.end()) os << "\\n" << it->second.name;
      os << "\"];\n";
    }
    for (const auto& [e, m] : quiver.arrows) {
      os << "  \"" << e.first.node << "," << e.first.row << "\" -> \"" << e.second.node << ","
         << e.second.row << "\"";
      if (m > 1) os << " [label=\"" << m << "\"]";
      os << ";\n";
    }
    os << "}\n";
    return os.str();
  }
};

/// The module label held at a lattice vertex in the initial seed: towers that
/// grow away from the axis, anchored so that the vertex row carries the
/// tower's outermost variable.
inline ModuleLabel initial_label(SeedAlgebra alg, const CartanData& cd, const QuiverVertex& v) {
  const int n = cd.n;
  if (!vertex_in_lattice(alg, cd, v.node, v.row))
    throw InvalidNode("vertex " + v.to_text() + " is not on the " + seed_algebra_name(alg) +
                      " lattice");
  std::vector<int> k(static_cast<std::size_t>(n), 0);
  if (alg == SeedAlgebra::A) {
    if (v.node < n) {
      int top = (v.node % 2 == 1) ? 0 : -1;
      k[static_cast<std::size_t>(v.node - 1)] = (top - v.row) / 2 + 1;
      return ModuleLabel{LabelVariant::T, n, -n + v.node - (v.node % 2) + 1, std::move(k)};
    }
    int m4 = ((v.row % 4) + 4) % 4;
    int top = (m4 == 0) ? 0 : m4 - 4;
    k[static_cast<std::size_t>(n - 1)] = (top - v.row) / 4 + 1;
    return ModuleLabel{LabelVariant::Ttilde, n, v.row, std::move(k)};
  }
  if (v.node < n) {
    int bottom = 1 - (v.node % 2);
    k[static_cast<std::size_t>(v.node - 1)] = (v.row - bottom) / 2 + 1;
    return ModuleLabel{LabelVariant::Ttilde, n, -n + v.node - (v.node % 2) + 1, std::move(k)};
  }
  int bottom = ((v.row % 4) + 4) % 4;
  k[static_cast<std::size_t>(n - 1)] = (v.row - bottom) / 4 + 1;
  return ModuleLabel{LabelVariant::T, n, -v.row, std::move(k)};
}

inline Seed build_initial_seed(SeedAlgebra alg, const CartanData& cd, int depth) {
  if (depth < 1) throw ConstraintViolated("window depth must be >= 1");
  Seed seed;
  seed.algebra = alg;
  seed.cd = cd;
  seed.depth = depth;
  int lo = alg == SeedAlgebra::A ? -depth : 0;
  int hi = alg == SeedAlgebra::A ? 0 : depth;
  for (int node = 1; node <= cd.n; ++node)
    for (int row = lo; row <= hi; ++row)
      if (vertex_in_lattice(alg, cd, node, row)) seed.quiver.add_vertex(QuiverVertex{node, row});
  for (const auto& v : seed.quiver.vertices)
    for (const auto& t : lattice_arrow_targets(alg, cd, v))
      if (seed.quiver.has_vertex(t)) seed.quiver.add_arrow(v, t, 1);
  for (const auto& v : seed.quiver.vertices) {
    ModuleLabel lab = initial_label(alg, cd, v);
    Monomial hw = highest_weight(cd, lab);
    std::string name = lab.to_text();
    seed.vars.emplace(v, ClusterVar{std::move(lab), std::move(hw), std::move(name), nullptr});
  }
  seed.quiver.validate();
  return seed;
}

// ---------------------------------------------------------------------------
// Label recognition: invert the tower highest-weight formula.
// ---------------------------------------------------------------------------

namespace cluster_detail {

/// Invert the ascending-shift product formula: per-node shift runs must be
/// consecutive with the right strides and a single consistent anchor.
inline std::optional<std::pair<int, std::vector<int>>> invert_ascending_weight(
    int n, const Monomial& m) {
  std::vector<std::vector<int>> sh(static_cast<std::size_t>(n) + 1);
  for (const auto& [key, e] : m.factors()) {
    if (e != 1) return std::nullopt;
    int node = var_node(key);
    if (node < 1 || node > n) return std::nullopt;
    sh[static_cast<std::size_t>(node)].push_back(var_shift(key));
  }
  std::vector<int> k(static_cast<std::size_t>(n), 0);
  const auto& ln = sh[static_cast<std::size_t>(n)];
  k[static_cast<std::size_t>(n - 1)] = static_cast<int>(ln.size());
  for (std::size_t i = 1; i < ln.size(); ++i)
    if (ln[i] != ln[0] + 4 * static_cast<int>(i)) return std::nullopt;
  bool have_s = false;
  int s = 0;
  if (!ln.empty()) {
    s = ln[0];
    have_s = true;
  }
  int acc = 0;
  for (int j = 1; j <= n - 1; ++j) {
    const auto& lst = sh[static_cast<std::size_t>(n - j)];
    k[static_cast<std::size_t>(n - j - 1)] = static_cast<int>(lst.size());
    if (!lst.empty()) {
      for (std::size_t i = 1; i < lst.size(); ++i)
        if (lst[i] != lst[0] + 2 * static_cast<int>(i)) return std::nullopt;
      int off = 4 * k[static_cast<std::size_t>(n - 1)] + 2 * acc + j;
      if (have_s) {
        if (lst[0] != s + off) return std::nullopt;
      } else {
        s = lst[0] - off;
        have_s = true;
      }
    }
    acc += static_cast<int>(lst.size());
  }
  if (!have_s) return std::nullopt;
  return std::make_pair(s, k);
}

inline Monomial negate_shifts(const Monomial& m) {
  std::vector<Monomial::Factor> fs;
  fs.reserve(m.factors().size());
  for (const auto& [key, e] : m.factors()) fs.emplace_back(var_key(var_node(key), -var_shift(key)), e);
  return Monomial::from_factors(std::move(fs));
}

inline bool single_node_support(const std::vector<int>& k, int* node_out = nullptr) {
  int node = 0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (k[i] == 0) continue;
    if (node != 0) return false;
    node = static_cast<int>(i) + 1;
  }
  if (node_out) *node_out = node;
  return node != 0;
}

}  // namespace cluster_detail

/// Recognise a monomial as the highest weight of a tower-family label. Plain
/// labels are preferred when the last node is absent, reflected ones when it
/// is present (matching the naming of the variables the schedules define).
inline std::optional<ModuleLabel> recognize_module_label(const CartanData& cd, const Monomial& m) {
  const int n = cd.n;
  if (m.is_identity())
    return ModuleLabel{LabelVariant::T, n, 0, std::vector<int>(static_cast<std::size_t>(n), 0)};
  std::optional<ModuleLabel> tilde, plain;
  if (auto r = cluster_detail::invert_ascending_weight(n, m)) {
    ModuleLabel lab{LabelVariant::Ttilde, n, r->first, r->second};
    if (highest_weight(cd, lab) == m) tilde = std::move(lab);
  }
  if (auto r = cluster_detail::invert_ascending_weight(n, cluster_detail::negate_shifts(m))) {
    ModuleLabel lab{LabelVariant::T, n, r->first, r->second};
    if (highest_weight(cd, lab) == m) plain = std::move(lab);
  }
  if (tilde && tilde->k[static_cast<std::size_t>(n - 1)] >= 1) return tilde;
  if (plain) return plain;
  return tilde;
}

// ---------------------------------------------------------------------------
// Equation-catalog matching.
// ---------------------------------------------------------------------------

namespace cluster_detail {

struct CatalogCombo {
  EquationInstance base;  // anchored at s = 0
  Monomial hw_lhs1, hw_lhs2;
  Monomial prod_rhs1, prod_rhs2;
};

inline const std::vector<CatalogCombo>& msystem_catalog(const CartanData& cd) {
  static std::map<int, std::vector<CatalogCombo>> cache;
  auto hit = cache.find(cd.n);
  if (hit != cache.end()) return hit->second;

  static const char* kFamilies[] = {"eqn1",    "eqn2",    "eqn3",     "eqn4",
                                    "eqn511",  "eqn512",  "eqn5211",  "eqn5221",
                                    "eqn6",    "eqn7",    "eqn8",     "eqn9",
                                    "eqn511d", "eqn512d", "eqn5211d", "eqn5221d"};
  const int kmax = cd.n <= 3 ? 16 : 10;
  std::vector<CatalogCombo> combos;
  std::vector<int> k(static_cast<std::size_t>(cd.n), 0);
  // Odometer over weight vectors with sum <= kmax: bump the first position
  // whose suffix sum leaves room, clearing everything before it.
  bool more = true;
  while (more) {
    for (const char* fam : kFamilies) {
      try {
        EquationInstance eq = make_equation(fam, cd.n, 0, k);
        CatalogCombo combo;
        combo.hw_lhs1 = highest_weight(cd, eq.lhs1);
        combo.hw_lhs2 = highest_weight(cd, eq.lhs2);
        combo.prod_rhs1 = highest_weight(cd, eq.rhs1a) * highest_weight(cd, eq.rhs1b);
        combo.prod_rhs2 = highest_weight(cd, eq.rhs2a);
        if (eq.rhs2b) combo.prod_rhs2 = combo.prod_rhs2 * highest_weight(cd, *eq.rhs2b);
        combo.base = std::move(eq);
        combos.push_back(std::move(combo));
      } catch (const Error&) {
        // combination outside the family's constraints
      }
    }
    more = false;
    for (std::size_t i = 0; i < k.size(); ++i) {
      int suffix = 0;
      for (std::size_t p = i; p < k.size(); ++p) suffix += k[p];
      if (suffix + 1 <= kmax) {
        ++k[i];
        for (std::size_t p = 0; p < i; ++p) k[p] = 0;
        more = true;
        break;
      }
    }
  }
  auto [it, ok] = cache.emplace(cd.n, std::move(combos));
  return it->second;
}

/// The uniform shift taking ref to m, when the two monomials differ by one.
inline std::optional<int> infer_uniform_shift(const Monomial& ref, const Monomial& m) {
  const auto& a = ref.factors();
  const auto& b = m.factors();
  if (a.size() != b.size()) return std::nullopt;
  if (a.empty()) return 0;
  int delta = var_shift(b[0].first) - var_shift(a[0].first);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (var_node(a[i].first) != var_node(b[i].first)) return std::nullopt;
    if (a[i].second != b[i].second) return std::nullopt;
    if (var_shift(b[i].first) - var_shift(a[i].first) != delta) return std::nullopt;
  }
  return delta;
}

inline Monomial shift_monomial(const Monomial& m, int delta) {
  std::vector<Monomial::Factor> fs;
  fs.reserve(m.factors().size());
  for (const auto& [key, e] : m.factors())
    fs.emplace_back(var_key(var_node(key), var_shift(key) + delta), e);
  return Monomial::from_factors(std::move(fs));
}

inline EquationInstance shift_instance(EquationInstance eq, int delta) {
  eq.s += delta;
  eq.lhs1.s += delta;
  eq.lhs2.s += delta;
  eq.rhs1a.s += delta;
  eq.rhs1b.s += delta;
  eq.rhs2a.s += delta;
  if (eq.rhs2b) eq.rhs2b->s += delta;
  return eq;
}

}  // namespace cluster_detail

struct MsystemMatch {
  EquationInstance instance;
  int pivot_slot = 1;    // which left slot the pivot realises (1 = lhs1, 2 = lhs2)
  ModuleLabel new_label;  // the other left slot: the variable the record defines
  bool in_is_first = true;  // the in-product realises the first summand
};

/// Match an exchange (pivot; in-product; out-product) against the catalog at
/// the highest-weight level: the pivot must realise a left slot and the two
/// arrow products must realise the two summand products. Throws
/// AmbiguousMatch when distinct instances both fit.
inline std::optional<MsystemMatch> match_exchange_products(const CartanData& cd,
                                                           const Monomial& pivot_hw,
                                                           const Monomial& in_hw,
                                                           const Monomial& out_hw) {
  std::vector<MsystemMatch> found;
  for (const auto& combo : cluster_detail::msystem_catalog(cd)) {
    for (int slot = 1; slot <= 2; ++slot) {
      const Monomial& ref = slot == 1 ? combo.hw_lhs1 : combo.hw_lhs2;
      auto delta = cluster_detail::infer_uniform_shift(ref, pivot_hw);
      if (!delta) continue;
      Monomial p1 = cluster_detail::shift_monomial(combo.prod_rhs1, *delta);
      Monomial p2 = cluster_detail::shift_monomial(combo.prod_rhs2, *delta);
      bool forward = (p1 == in_hw && p2 == out_hw);
      bool swapped = (p1 == out_hw && p2 == in_hw);
      if (!forward && !swapped) continue;
      EquationInstance inst = cluster_detail::shift_instance(combo.base, *delta);
      ModuleLabel nl = slot == 1 ? inst.lhs2 : inst.lhs1;
      found.push_back(MsystemMatch{std::move(inst), slot, std::move(nl), forward});
    }
  }
  if (found.empty()) return std::nullopt;
  if (found.size() > 1) {
    // Distinct parameterisations that define the same new variable are
    // harmless; a conflict over the defined variable is a genuine ambiguity.
    for (std::size_t i = 1; i < found.size(); ++i)
      if (!(highest_weight(cd, found[i].new_label) == highest_weight(cd, found[0].new_label)))
        throw AmbiguousMatch("exchange at highest weight " + pivot_hw.to_text() +
                             " matches both " + found[0].instance.family + " and " +
                             found[i].instance.family);
  }
  return found[0];
}

// ---------------------------------------------------------------------------
// Exchange records and mutation.
// ---------------------------------------------------------------------------

struct ExchangeFactor {
  std::string name;
  Monomial hw;
  int multiplicity = 1;
  std::optional<ModuleLabel> label;

  nlohmann::json to_json() const {
    nlohmann::json j{{"name", name}, {"hw", hw.to_text()}, {"mult", multiplicity}};
    if (label) j["label"] = label->to_json();
    return j;
  }
};

struct ExchangeRecord {
  QuiverVertex vertex;
  int step = -1;
  std::string pivot_name, new_name;
  std::optional<ModuleLabel> pivot_label, new_label;
  Monomial pivot_hw, new_hw;
  std::vector<ExchangeFactor> in_factors, out_factors;
  Monomial in_product_hw, out_product_hw;
  // Classification: "msystem" (catalog match), "reanchor" (tower re-anchoring
  // on one node), "defining" (recognised label outside the catalog), or
  // "formal" (no recognised label; the payload is the ground truth).
  std::string category;
  std::optional<EquationInstance> matched;
  int matched_pivot_slot = 0;
  bool payload_checked = false;
  bool division_exact = false;
  std::size_t numerator_terms = 0, quotient_terms = 0;
  std::optional<bool> quotient_matches_module_character;

  nlohmann::json to_json() const {
    nlohmann::json in = nlohmann::json::array(), out = nlohmann::json::array();
    for (const auto& f : in_factors) in.push_back(f.to_json());
    for (const auto& f : out_factors) out.push_back(f.to_json());
    nlohmann::json j{{"vertex", vertex.to_json()},
                     {"step", step},
                     {"pivot", pivot_name},
                     {"pivot_hw", pivot_hw.to_text()},
                     {"new", new_name},
                     {"new_hw", new_hw.to_text()},
                     {"in_factors", in},
                     {"out_factors", out},
                     {"in_product_hw", in_product_hw.to_text()},
                     {"out_product_hw", out_product_hw.to_text()},
                     {"category", category}};
    if (pivot_label) j["pivot_label"] = pivot_label->to_json();
    if (new_label) j["new_label"] = new_label->to_json();
    if (matched) {
      j["matched"] = matched->to_json();
      j["matched_pivot_slot"] = matched_pivot_slot;
    }
    if (payload_checked) {
      j["division_exact"] = division_exact;
      j["numerator_terms"] = numerator_terms;
      j["quotient_terms"] = quotient_terms;
      if (quotient_matches_module_character)
        j["quotient_matches_module_character"] = *quotient_matches_module_character;
    }
    return j;
  }
};

struct MutateOptions {
  bool with_payloads = false;
  bool match_catalog = true;
  bool require_interior = true;
  // In payload mode, additionally compare the quotient of a matched record
  // against the defined label's character.
  bool check_matched_quotient = false;
  // Same comparison for unmatched records whose new variable is recognised.
  bool check_recognized_quotient = false;
  EngineOptions engine;
};

struct MutationResult {
  Seed seed;
  ExchangeRecord record;
};

namespace cluster_detail {

inline std::shared_ptr<const LaurentPoly> ensure_payload(const ClusterVar& var,
                                                         const CartanData& cd,
                                                         const EngineOptions& engine) {
  if (var.payload) return var.payload;
  if (!var.label)
    throw UndefinedValue("variable " + var.name + " has neither a payload nor a label");
  return std::make_shared<LaurentPoly>(slot_character(cd, *var.label, engine));
}

/// Product of the payloads with multiplicities, smallest factors first.
inline LaurentPoly payload_product(std::vector<std::shared_ptr<const LaurentPoly>> factors,
                                   const std::vector<int>& mults) {
  std::vector<const LaurentPoly*> flat;
  for (std::size_t i = 0; i < factors.size(); ++i)
    for (int c = 0; c < mults[i]; ++c) flat.push_back(factors[i].get());
  if (flat.empty()) return LaurentPoly::one();
  std::sort(flat.begin(), flat.end(),
            [](const LaurentPoly* a, const LaurentPoly* b) { return a->term_count() < b->term_count(); });
  LaurentPoly acc = *flat[0];
  for (std::size_t i = 1; i < flat.size(); ++i) acc = acc * *flat[i];
  return acc;
}

/// The defined variable's top monomial, read off a freshly divided payload:
/// the unique maximal dominant term when there is one, otherwise the
/// deterministic leading term.
inline Monomial quotient_top_monomial(const CartanData& cd, const LaurentPoly& q) {
  std::vector<Monomial> doms;
  for (const auto& [m, c] : q.terms())
    if (m.is_dominant() && c > 0) doms.push_back(m);
  std::vector<Monomial> maximal;
  for (const auto& m : doms) {
    bool below = false;
    for (const auto& other : doms)
      if (!(other == m) && leq(cd, m, other)) {
        below = true;
        break;
      }
    if (!below) maximal.push_back(m);
  }
  if (maximal.size() == 1) return maximal[0];
  auto terms = q.canonical_terms();
  if (terms.empty()) throw UndefinedValue("cannot read a top monomial off the zero payload");
  return terms.back().first;
}

}  // namespace cluster_detail

/// Mutate the seed at v. The returned record carries the exchange data, its
/// classification, and (payload mode) the exact-division results; the new
/// seed holds the defined variable with the quotient as its payload.
inline MutationResult mutate(const Seed& seed, const QuiverVertex& v,
                             const MutateOptions& opts = {}) {
  if (!seed.quiver.has_vertex(v))
    throw BoundaryVertex("vertex " + v.to_text() + " is not in the window");
  if (opts.require_interior && !seed.interior(v))
    throw BoundaryVertex("vertex " + v.to_text() +
                         " touches the window boundary; deepen the window");

  const ClusterVar& pivot = seed.var_at(v);
  auto ins = seed.quiver.in_of(v);
  auto outs = seed.quiver.out_of(v);

  ExchangeRecord rec;
  rec.vertex = v;
  rec.pivot_name = pivot.name;
  rec.pivot_label = pivot.label;
  rec.pivot_hw = pivot.hw;

  Monomial in_hw, out_hw;
  for (const auto& [u, m] : ins) {
    const ClusterVar& var = seed.var_at(u);
    rec.in_factors.push_back(ExchangeFactor{var.name, var.hw, m, var.label});
    in_hw = in_hw * var.hw.pow(m);
  }
  for (const auto& [u, m] : outs) {
    const ClusterVar& var = seed.var_at(u);
    rec.out_factors.push_back(ExchangeFactor{var.name, var.hw, m, var.label});
    out_hw = out_hw * var.hw.pow(m);
  }
  rec.in_product_hw = in_hw;
  rec.out_product_hw = out_hw;

  std::optional<MsystemMatch> match;
  if (opts.match_catalog) match = match_exchange_products(seed.cd, pivot.hw, in_hw, out_hw);

  bool have_hw = false;
  if (match) {
    rec.new_label = match->new_label;
    rec.new_hw = highest_weight(seed.cd, match->new_label);
    rec.matched = match->instance;
    rec.matched_pivot_slot = match->pivot_slot;
    rec.category = "msystem";
    have_hw = true;
  } else {
    bool out_below = leq(seed.cd, out_hw, in_hw);
    bool in_below = leq(seed.cd, in_hw, out_hw);
    if (out_below != in_below) {
      const Monomial& dominant = out_below ? in_hw : out_hw;
      rec.new_hw = dominant * pivot.hw.inverse();
      have_hw = true;
    } else if (!opts.with_payloads) {
      throw UndefinedValue("cannot identify the dominant exchange summand at " + v.to_text() +
                           " without payloads");
    }
  }

  // Payload propagation.
  std::shared_ptr<const LaurentPoly> new_payload;
  if (opts.with_payloads) {
    std::vector<std::shared_ptr<const LaurentPoly>> in_payloads, out_payloads;
    std::vector<int> in_mults, out_mults;
    for (const auto& [u, m] : ins) {
      in_payloads.push_back(cluster_detail::ensure_payload(seed.var_at(u), seed.cd, opts.engine));
      in_mults.push_back(m);
    }
    for (const auto& [u, m] : outs) {
      out_payloads.push_back(cluster_detail::ensure_payload(seed.var_at(u), seed.cd, opts.engine));
      out_mults.push_back(m);
    }
    LaurentPoly numerator = cluster_detail::payload_product(std::move(in_payloads), in_mults);
    numerator += cluster_detail::payload_product(std::move(out_payloads), out_mults);
    std::shared_ptr<const LaurentPoly> pivot_payload =
        cluster_detail::ensure_payload(pivot, seed.cd, opts.engine);
    rec.numerator_terms = numerator.term_count();
    LaurentPoly q = exact_divide(numerator, *pivot_payload);  // throws NonExactDivision
    rec.payload_checked = true;
    rec.division_exact = true;
    rec.quotient_terms = q.term_count();
    if (!have_hw) {
      rec.new_hw = cluster_detail::quotient_top_monomial(seed.cd, q);
      have_hw = true;
    }
    if (match && opts.check_matched_quotient) {
      LaurentPoly fm = slot_character(seed.cd, *rec.new_label, opts.engine);
      rec.quotient_matches_module_character = (q == fm);
    }
    new_payload = std::make_shared<LaurentPoly>(std::move(q));
  }

  if (!have_hw)
    throw UndefinedValue("cannot determine the exchanged variable at " + v.to_text());

  if (!match) {
    rec.new_label = recognize_module_label(seed.cd, rec.new_hw);
    if (rec.new_label && rec.pivot_label) {
      int a = 0, b = 0;
      bool sa = cluster_detail::single_node_support(rec.new_label->k, &a);
      bool sb = cluster_detail::single_node_support(rec.pivot_label->k, &b);
      rec.category = (sa && sb && a == b) ? "reanchor" : "defining";
    } else {
      rec.category = rec.new_label ? "defining" : "formal";
    }
    if (rec.new_label && new_payload && opts.check_recognized_quotient) {
      LaurentPoly chi = slot_character(seed.cd, *rec.new_label, opts.engine);
      rec.quotient_matches_module_character = (*new_payload == chi);
    }
  }

  MutationResult result{seed, std::move(rec)};
  ExchangeRecord& record = result.record;
  Seed& next = result.seed;
  next.mutation_count += 1;
  record.new_name = record.new_label
                        ? record.new_label->to_text()
                        : "x" + std::to_string(next.mutation_count) + "@" + v.to_text();
  next.quiver.mutate_at(v);
  next.vars[v] = ClusterVar{record.new_label, record.new_hw, record.new_name, new_payload};
  return result;
}

// ---------------------------------------------------------------------------
// Column schedules.
// ---------------------------------------------------------------------------

/// Columns: 1..n-1 are the single-node columns; n and n+1 interleave the last
/// node's rows (stride four).
inline int column_node(const CartanData& cd, int c) {
  if (c < 1 || c > cd.n + 1) throw InvalidNode("column index out of range");
  return std::min(c, cd.n);
}

inline int column_top_row(const CartanData& cd, int c) {
  if (c <= cd.n - 1) return (c % 2 == 1) ? 0 : -1;
  int first = (cd.n % 2 == 1) ? 0 : -1;  // top row of column n
  return c == cd.n ? first : first - 2;
}

inline int column_stride(const CartanData& cd, int c) { return c <= cd.n - 1 ? 2 : 4; }

/// The column's vertices from the top row down to -floor.
inline std::vector<QuiverVertex> column_vertices(const CartanData& cd, int c, int floor) {
  std::vector<QuiverVertex> out;
  int node = column_node(cd, c);
  int stride = column_stride(cd, c);
  for (int row = column_top_row(cd, c); row >= -floor; row -= stride)
    out.push_back(QuiverVertex{node, row});
  return out;
}

struct SchedulePass {
  std::string macro;  // provenance: which block of the compiled sequence
  int column = 0;
  int floor = 0;  // rows mutated: top .. -floor
  std::size_t first_step = 0, step_count = 0;

  nlohmann::json to_json() const {
    return nlohmann::json{{"macro", macro},
                          {"column", column},
                          {"floor", floor},
                          {"first_step", first_step},
                          {"step_count", step_count}};
  }
};

struct MutationSchedule {
  int case_id = 0;
  int n = 0;
  std::vector<int> k;
  std::vector<SchedulePass> passes;
  std::vector<QuiverVertex> steps;
  std::vector<std::size_t> step_pass;  // step index -> pass index
  int required_depth = 0;

  nlohmann::json to_json() const {
    nlohmann::json ps = nlohmann::json::array(), ss = nlohmann::json::array();
    for (const auto& p : passes) ps.push_back(p.to_json());
    for (const auto& s : steps) ss.push_back(s.to_json());
    return nlohmann::json{{"case", case_id},     {"n", n},
                          {"k", k},              {"passes", ps},
                          {"steps", ss},         {"required_depth", required_depth}};
  }
};

/// Compile the column sequence for a weight vector. Case 1 (last weight zero)
/// builds the stage ladder over the single-node columns; case 2 (last weight
/// positive) builds the head blocks over the last-node columns and the
/// alternating stage blocks. Pass floors descend by four rows per subsequent
/// pass so every scheduled exchange sees fully propagated neighbours, ending
/// at the depth the pinned records need.
inline MutationSchedule compile_schedule(int case_id, const CartanData& cd,
                                         const std::vector<int>& k) {
  const int n = cd.n;
  if (static_cast<int>(k.size()) != n)
    throw ConstraintViolated("weight vector must have " + std::to_string(n) + " entries");
  for (int v : k)
    if (v < 0) throw ConstraintViolated("weights must be nonnegative");

  MutationSchedule sched;
  sched.case_id = case_id;
  sched.n = n;
  sched.k = k;

  const int kn = k[static_cast<std::size_t>(n - 1)];
  std::vector<std::pair<std::string, int>> cols;  // (macro, column)

  if (case_id == 1) {
    if (kn != 0)
      throw ConstraintViolated("case 1 requires weight 0 at node " + std::to_string(n));
    int l = 0;
    for (int p = n - 1; p >= 1; --p)
      if (k[static_cast<std::size_t>(p - 1)] > 0) {
        l = p;
        break;
      }
    if (l >= 1) {
      int blocks = (l % 2 == 1) ? (l - 1) / 2 : l / 2;
      for (int b = 1; b <= blocks; ++b)
        for (int c = 2 * b - 1; c >= 1; --c)
          cols.emplace_back("M block " + std::to_string(b), c);
      for (int t = l; t >= 2; --t)
        for (int rep = 1; rep <= k[static_cast<std::size_t>(t - 1)]; ++rep)
          for (int c = t - 1; c >= 1; --c)
            cols.emplace_back("stage t=" + std::to_string(t) + " pass " + std::to_string(rep), c);
    }
  } else if (case_id == 2) {
    if (kn < 1)
      throw ConstraintViolated("case 2 requires weight >= 1 at node " + std::to_string(n));
    int r = n;  // index of the first nonzero weight below node n
    for (int p = 1; p <= n - 1; ++p)
      if (k[static_cast<std::size_t>(p - 1)] > 0) {
        r = p;
        break;
      }
    if (r == n - 1) {
      // Head blocks only: alternate the two last-node columns.
      int kr = k[static_cast<std::size_t>(r - 1)];
      if (n % 2 == 1) {
        cols.emplace_back("N", n);
        for (int b = 1; b <= kr; ++b)
          cols.emplace_back("head " + std::to_string(b), b % 2 == 1 ? n + 1 : n);
      } else {
        for (int b = 1; b <= kr; ++b)
          cols.emplace_back("head " + std::to_string(b), b % 2 == 1 ? n : n + 1);
      }
    } else if (r <= n - 2) {
      // Prefix blocks.
      int blocks, inner_start_base;
      if (n % 2 == 1) {
        blocks = (r % 2 == 1) ? (n - r) / 2 : (n - r + 1) / 2;
        inner_start_base = 2;
      } else {
        blocks = (r % 2 == 1) ? (n - r - 1) / 2 : (n - r) / 2;
        inner_start_base = 1;
      }
      for (int b = 1; b <= blocks; ++b) {
        std::string macro = "N block " + std::to_string(b);
        for (int c = n - 2 * b + inner_start_base; c <= n - 1; ++c)
          if (c >= 1) cols.emplace_back(macro, c);
        cols.emplace_back(macro, b % 2 == 1 ? n : n + 1);
      }
      // Stage blocks: k_t alternating sweeps per stage.
      int base = ((n % 2 == 1) == (r % 2 == 1)) ? (n - r) / 2 : (n - r + 1) / 2;
      bool inverted_row = (n % 2 == 0) && (r % 2 == 1);
      int acc = 0;
      for (int t = r; t <= n - 2; ++t) {
        int kt = k[static_cast<std::size_t>(t - 1)];
        int h = base + acc;
        bool primed_lead = inverted_row ? (h % 2 == 0) : (h % 2 == 1);
        for (int b = 1; b <= kt; ++b) {
          bool primed = (b % 2 == 1) ? primed_lead : !primed_lead;
          std::string macro = std::string(primed ? "S'" : "S") + " stage t=" + std::to_string(t) +
                              " pass " + std::to_string(b);
          for (int c = t + 1; c <= n - 1; ++c) cols.emplace_back(macro, c);
          cols.emplace_back(macro, primed ? n + 1 : n);
        }
        acc += kt;
      }
    }
    // r == n: nothing to mutate.
  } else {
    throw ConstraintViolated("schedule case must be 1 or 2");
  }

  if (cols.empty()) return sched;

  int pinned = case_id == 1 ? 2 * std::max(k[0] - 1, 0) : 4 * kn - 2;
  pinned = std::max(pinned, -column_top_row(cd, cols.back().second));
  const int passes = static_cast<int>(cols.size());
  for (int p = 0; p < passes; ++p) {
    SchedulePass pass;
    pass.macro = cols[static_cast<std::size_t>(p)].first;
    pass.column = cols[static_cast<std::size_t>(p)].second;
    pass.floor = pinned + 4 * (passes - 1 - p);
    pass.first_step = sched.steps.size();
    for (const auto& v : column_vertices(cd, pass.column, pass.floor)) {
      sched.steps.push_back(v);
      sched.step_pass.push_back(sched.passes.size());
    }
    pass.step_count = sched.steps.size() - pass.first_step;
    sched.passes.push_back(std::move(pass));
  }
  sched.required_depth = pinned + 4 * (passes - 1) + 4;
  return sched;
}

// ---------------------------------------------------------------------------
// Schedule execution.
// ---------------------------------------------------------------------------

/// Materialise every variable's character payload (labelled variables only).
inline Seed seed_with_payloads(Seed seed, const EngineOptions& engine) {
  for (auto& [v, var] : seed.vars)
    if (!var.payload) var.payload = cluster_detail::ensure_payload(var, seed.cd, engine);
  return seed;
}

struct ScheduleRun {
  Seed seed;
  std::vector<ExchangeRecord> records;
};

inline ScheduleRun run_schedule(Seed seed, const MutationSchedule& sched,
                                const MutateOptions& opts = {}) {
  if (seed.algebra != SeedAlgebra::A)
    throw Unsupported("schedules are defined on the A-family seeds");
  if (sched.n != seed.cd.n) throw InvalidRank("schedule rank does not match the seed");
  if (seed.depth < sched.required_depth)
    throw WindowTooSmall(sched.required_depth,
                         "window depth " + std::to_string(seed.depth) +
                             " is below the schedule's required depth " +
                             std::to_string(sched.required_depth));
  if (opts.with_payloads) seed = seed_with_payloads(std::move(seed), opts.engine);
  ScheduleRun run{std::move(seed), {}};
  run.records.reserve(sched.steps.size());
  for (std::size_t i = 0; i < sched.steps.size(); ++i) {
    MutationResult res = mutate(run.seed, sched.steps[i], opts);
    res.record.step = static_cast<int>(i);
    run.seed = std::move(res.seed);
    run.records.push_back(std::move(res.record));
  }
  return run;
}

/// Convenience wrapper matching one already-built record against the catalog.
inline std::optional<MsystemMatch> match_exchange_to_msystem(const CartanData& cd,
                                                             const ExchangeRecord& rec) {
  return match_exchange_products(cd, rec.pivot_hw, rec.in_product_hw, rec.out_product_hw);
}

}  // namespace qcw
