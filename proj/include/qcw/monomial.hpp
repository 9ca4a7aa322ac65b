#pragma once
// Laurent monomials in the variables Y_{i,s} (node i, integer spectral shift s),
// the generator monomials A_{i,s}, dominance predicates, the A-lattice
// decomposition, and the induced partial order.

#include "qcw/cartan.hpp"
#include "qcw/core.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace qcw {

// ---------------------------------------------------------------------------
// Variable keys: (node, shift) packed into one 64-bit integer whose natural
// order equals lexicographic (node asc, shift asc).
// ---------------------------------------------------------------------------

using VarKey = std::uint64_t;

constexpr std::int32_t kShiftBias = 1 << 30;

inline VarKey var_key(int i, int s) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(i)) << 32) |
         static_cast<std::uint32_t>(s + kShiftBias);
}
inline int var_node(VarKey k) { return static_cast<int>(k >> 32); }
inline int var_shift(VarKey k) {
  return static_cast<std::int32_t>(static_cast<std::uint32_t>(k)) - kShiftBias;
}

// ---------------------------------------------------------------------------
// Monomial: sorted, zero-free factor list. Immutable value semantics.
// ---------------------------------------------------------------------------

class Monomial {
 public:
  using Factor = std::pair<VarKey, std::int32_t>;  // (variable, exponent)

  Monomial() = default;

  /// Build from an arbitrary (possibly unsorted / repeated) factor list.
  static Monomial from_factors(std::vector<Factor> fs) {
    std::sort(fs.begin(), fs.end(),
              [](const Factor& a, const Factor& b) { return a.first < b.first; });
    Monomial m;
    m.f_.reserve(fs.size());
    for (const auto& [k, e] : fs) {
      if (!m.f_.empty() && m.f_.back().first == k) {
        m.f_.back().second = checked_add(m.f_.back().second, e);
        if (m.f_.back().second == 0) m.f_.pop_back();
      } else if (e != 0) {
        m.f_.emplace_back(k, e);
      }
    }
    return m;
  }

  static Monomial variable(int i, int s, std::int32_t e = 1) {
    Monomial m;
    if (e != 0) m.f_.emplace_back(var_key(i, s), e);
    return m;
  }

  bool is_identity() const { return f_.empty(); }
  const std::vector<Factor>& factors() const { return f_; }
  std::size_t size() const { return f_.size(); }

  std::int32_t exponent(int i, int s) const {
    VarKey k = var_key(i, s);
    auto it = std::lower_bound(
        f_.begin(), f_.end(), k,
        [](const Factor& a, VarKey key) { return a.first < key; });
    return (it != f_.end() && it->first == k) ? it->second : 0;
  }

  Monomial operator*(const Monomial& o) const {
    Monomial r;
    r.f_.reserve(f_.size() + o.f_.size());
    std::size_t a = 0, b = 0;
    while (a < f_.size() && b < o.f_.size()) {
      if (f_[a].first < o.f_[b].first) {
        r.f_.push_back(f_[a++]);
      } else if (o.f_[b].first < f_[a].first) {
        r.f_.push_back(o.f_[b++]);
      } else {
        std::int32_t e = checked_add(f_[a].second, o.f_[b].second);
        if (e != 0) r.f_.emplace_back(f_[a].first, e);
        ++a;
        ++b;
      }
    }
    while (a < f_.size()) r.f_.push_back(f_[a++]);
    while (b < o.f_.size()) r.f_.push_back(o.f_[b++]);
    return r;
  }

  Monomial inverse() const {
    Monomial r = *this;
    for (auto& [k, e] : r.f_) e = -e;
    return r;
  }

  Monomial pow(int p) const {
    if (p == 0) return Monomial();
    Monomial r = *this;
    for (auto& [k, e] : r.f_) {
      std::int64_t v = static_cast<std::int64_t>(e) * p;
      if (v > INT32_MAX || v < INT32_MIN) throw Error("Overflow", "exponent overflow in pow");
      e = static_cast<std::int32_t>(v);
    }
    return r;
  }

  bool operator==(const Monomial& o) const { return f_ == o.f_; }
  bool operator!=(const Monomial& o) const { return !(*this == o); }
  /// Deterministic total order (by packed key sequence, then exponents).
  bool operator<(const Monomial& o) const {
    return std::lexicographical_compare(
        f_.begin(), f_.end(), o.f_.begin(), o.f_.end(),
        [](const Factor& a, const Factor& b) {
          return a.first != b.first ? a.first < b.first : a.second < b.second;
        });
  }

  std::uint64_t hash() const {
    std::uint64_t h = 14695981039346656037ULL;
    for (const auto& [k, e] : f_) {
      h = fnv1a_u64(k, h);
      h = fnv1a_u64(static_cast<std::uint64_t>(static_cast<std::uint32_t>(e)), h);
    }
    return h;
  }

  // --- shift statistics -----------------------------------------------------

  /// Largest shift with a nonzero exponent at any node. Undefined for identity.
  int max_shift() const {
    require_nonempty("max_shift");
    int best = INT32_MIN;
    for (const auto& [k, e] : f_) best = std::max(best, var_shift(k));
    return best;
  }

  int min_shift() const {
    require_nonempty("min_shift");
    int best = INT32_MAX;
    for (const auto& [k, e] : f_) best = std::min(best, var_shift(k));
    return best;
  }

  // --- dominance ------------------------------------------------------------

  bool is_dominant() const {
    for (const auto& [k, e] : f_)
      if (e < 0) return false;
    return true;
  }

  bool is_antidominant() const {
    for (const auto& [k, e] : f_)
      if (e > 0) return false;
    return true;
  }

  bool is_node_dominant(int i) const {
    for (const auto& [k, e] : f_)
      if (var_node(k) == i && e < 0) return false;
    return true;
  }

  bool has_node(int i) const {
    for (const auto& [k, e] : f_)
      if (var_node(k) == i) return true;
    return false;
  }

  /// Right-negativity: every exponent sitting at the maximal shift of the
  /// support is negative. Undefined for the identity monomial.
  bool is_right_negative() const {
    require_nonempty("right-negativity");
    int top = max_shift();
    for (const auto& [k, e] : f_)
      if (var_shift(k) == top && e > 0) return false;
    return true;
  }

  // --- text / JSON ----------------------------------------------------------

  /// Canonical text form: factors by (node asc, shift asc), `i_s` or `i_s^e`,
  /// space separated; the identity prints as "1".
  std::string to_text() const {
    if (f_.empty()) return "1";
    std::ostringstream os;
    bool first = true;
    for (const auto& [k, e] : f_) {
      if (!first) os << ' ';
      first = false;
      os << var_node(k) << '_' << var_shift(k);
      if (e != 1) os << '^' << e;
    }
    return os.str();
  }

  static Monomial from_text(const std::string& text) {
    std::istringstream is(text);
    std::vector<Factor> fs;
    std::string tok;
    bool saw_any = false;
    while (is >> tok) {
      saw_any = true;
      if (tok == "1" && fs.empty()) continue;  // identity token
      std::size_t us = tok.find('_');
      if (us == std::string::npos || us == 0)
        throw ParseError("bad monomial token '" + tok + "'");
      std::size_t caret = tok.find('^', us + 1);
      int i = 0, s = 0, e = 1;
      try {
        i = std::stoi(tok.substr(0, us));
        std::string stail = (caret == std::string::npos)
                                ? tok.substr(us + 1)
                                : tok.substr(us + 1, caret - us - 1);
        s = std::stoi(stail);
        if (caret != std::string::npos) e = std::stoi(tok.substr(caret + 1));
      } catch (const std::exception&) {
        throw ParseError("bad monomial token '" + tok + "'");
      }
      if (i < 1) throw ParseError("node must be positive in '" + tok + "'");
      fs.emplace_back(var_key(i, s), e);
    }
    if (!saw_any) throw ParseError("empty monomial text");
    return from_factors(std::move(fs));
  }

  nlohmann::json to_json() const {
    nlohmann::json fac = nlohmann::json::array();
    for (const auto& [k, e] : f_)
      fac.push_back({{"i", var_node(k)}, {"s", var_shift(k)}, {"e", e}});
    return nlohmann::json{{"factors", fac}};
  }

  static Monomial from_json(const nlohmann::json& j) {
    if (!j.contains("factors") || !j["factors"].is_array())
      throw ParseError("monomial JSON requires a 'factors' array");
    std::vector<Factor> fs;
    for (const auto& f : j["factors"]) {
      int i = f.at("i").get<int>();
      int s = f.at("s").get<int>();
      int e = f.value("e", 1);
      if (i < 1) throw ParseError("node must be positive in monomial JSON");
      fs.emplace_back(var_key(i, s), e);
    }
    return from_factors(std::move(fs));
  }

 private:
  void require_nonempty(const char* what) const {
    if (f_.empty())
      throw UndefinedValue(std::string(what) + " is undefined for the identity monomial");
  }

  std::vector<Factor> f_;
};

struct MonomialHash {
  std::size_t operator()(const Monomial& m) const { return m.hash(); }
};

// ---------------------------------------------------------------------------
// Generator monomials A_{i,s} and the A-lattice.
// ---------------------------------------------------------------------------

/// A_{i,s} = Y_{i,s+d_i} Y_{i,s-d_i} * prod over neighbours j of
/// Y_{j,s}^{-1} (single bond into i) or Y_{j,s+1}^{-1} Y_{j,s-1}^{-1} (double bond).
inline Monomial a_monomial(const CartanData& cd, int i, int s) {
  cd.check_node(i);
  std::vector<Monomial::Factor> fs;
  int di = cd.d[i];
  fs.emplace_back(var_key(i, s + di), 1);
  fs.emplace_back(var_key(i, s - di), 1);
  for (int j = 1; j <= cd.n; ++j) {
    if (j == i) continue;
    int c = cd.C[j][i];
    if (c == -1) {
      fs.emplace_back(var_key(j, s), -1);
    } else if (c == -2) {
      fs.emplace_back(var_key(j, s + 1), -1);
      fs.emplace_back(var_key(j, s - 1), -1);
    } else if (c != 0) {
      throw Unsupported("unexpected Cartan entry " + std::to_string(c));
    }
  }
  return Monomial::from_factors(std::move(fs));
}

/// A point of the multiplicative lattice generated by the A_{i,s}:
/// multiplicities c_{i,s} with m = prod A_{i,s}^{c_{i,s}}.
struct ALatticePoint {
  std::map<std::pair<int, int>, int> multiplicities;  // (i,s) -> exponent of A_{i,s}

  bool all_nonnegative() const {
    for (const auto& [k, c] : multiplicities)
      if (c < 0) return false;
    return true;
  }
  bool all_nonpositive() const {
    for (const auto& [k, c] : multiplicities)
      if (c > 0) return false;
    return true;
  }
};

/// Decompose m as a product of A_{i,s}^{c}; returns nullopt when m is not in
/// the lattice. The decomposition, when it exists, is unique: the generator
/// A_{i,t} is the only one whose top variable is Y_{i,t+d_i}, so the top shift
/// of the residual forces one multiplicity at a time.
inline std::optional<ALatticePoint> decompose_in_a_lattice(const CartanData& cd,
                                                           const Monomial& m) {
  ALatticePoint out;
  if (m.is_identity()) return out;
  const int floor_shift = m.min_shift();
  Monomial r = m;
  // Each round clears the residual's top shift; generators may never reach
  // below the original support, which bounds the loop.
  while (!r.is_identity()) {
    int top = r.max_shift();
    // Find one node with content at the top shift (smallest node first).
    int node = -1;
    std::int32_t exp = 0;
    for (const auto& [k, e] : r.factors()) {
      if (var_shift(k) == top) {
        node = var_node(k);
        exp = e;
        break;
      }
    }
    int t = top - cd.d[node];
    if (t - cd.d[node] < floor_shift) return std::nullopt;  // fell past the support
    out.multiplicities[{node, t}] += exp;
    r = r * a_monomial(cd, node, t).pow(-exp);
  }
  // Drop explicit zeros (possible when increments cancel).
  for (auto it = out.multiplicities.begin(); it != out.multiplicities.end();)
    it = (it->second == 0) ? out.multiplicities.erase(it) : std::next(it);
  return out;
}

/// Total generator count with the sign convention of descents: a product of
/// v distinct A^{-1} factors has v_total = v.
inline int v_total(const ALatticePoint& p) {
  int v = 0;
  for (const auto& [k, c] : p.multiplicities) v -= c;
  return v;
}

inline int v_node(const ALatticePoint& p, int i) {
  int v = 0;
  for (const auto& [k, c] : p.multiplicities)
    if (k.first == i) v -= c;
  return v;
}

/// Partial order: a <= b iff a differs from b by a product of A^{-1} factors,
/// i.e. b * a^{-1} lies in the nonnegative cone of the A-lattice.
inline bool leq(const CartanData& cd, const Monomial& a, const Monomial& b) {
  auto dec = decompose_in_a_lattice(cd, b * a.inverse());
  return dec.has_value() && dec->all_nonnegative();
}

}  // namespace qcw
