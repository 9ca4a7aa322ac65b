#pragma once
// Laurent polynomials in the Y_{i,s} with arbitrary-precision integer
// coefficients: sums, products, streaming product accumulation, and exact
// division (used by seed mutation, where quotients are guaranteed exact).

#include "qcw/core.hpp"
#include "qcw/monomial.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdint>
#include <queue>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace qcw {

class LaurentPoly {
 public:
  using TermMap = std::unordered_map<Monomial, Int, MonomialHash>;

  LaurentPoly() = default;
  static LaurentPoly zero() { return LaurentPoly(); }
  static LaurentPoly one() { return from_monomial(Monomial()); }
  static LaurentPoly from_monomial(const Monomial& m, Int c = 1) {
    LaurentPoly p;
    if (c != 0) p.t_.emplace(m, std::move(c));
    return p;
  }

  bool is_zero() const { return t_.empty(); }
  std::size_t term_count() const { return t_.size(); }
  const TermMap& terms() const { return t_; }

  Int coeff(const Monomial& m) const {
    auto it = t_.find(m);
    return it == t_.end() ? Int(0) : it->second;
  }

  /// Sum of all coefficients (the dimension when this is a character).
  Int total() const {
    Int s = 0;
    for (const auto& [m, c] : t_) s += c;
    return s;
  }

  void add_term(const Monomial& m, const Int& c) {
    if (c == 0) return;
    auto [it, inserted] = t_.try_emplace(m, c);
    if (!inserted) {
      it->second += c;
      if (it->second == 0) t_.erase(it);
    }
  }

  LaurentPoly& operator+=(const LaurentPoly& o) {
    for (const auto& [m, c] : o.t_) add_term(m, c);
    return *this;
  }
  LaurentPoly& operator-=(const LaurentPoly& o) {
    for (const auto& [m, c] : o.t_) add_term(m, -c);
    return *this;
  }
  friend LaurentPoly operator+(LaurentPoly a, const LaurentPoly& b) { return a += b; }
  friend LaurentPoly operator-(LaurentPoly a, const LaurentPoly& b) { return a -= b; }

  /// Streaming accumulation of scale * p * q into acc, erasing cancelled terms
  /// eagerly so the peak size tracks the live residual, not the pair count.
  static void accumulate_product(LaurentPoly& acc, const LaurentPoly& p,
                                 const LaurentPoly& q, const Int& scale) {
    if (scale == 0 || p.is_zero() || q.is_zero()) return;
    const LaurentPoly& outer = p.term_count() <= q.term_count() ? p : q;
    const LaurentPoly& inner = p.term_count() <= q.term_count() ? q : p;
    acc.t_.reserve(acc.t_.size() + inner.term_count());
    for (const auto& [mo, co] : outer.t_) {
      Int f = co * scale;
      for (const auto& [mi, ci] : inner.t_) acc.add_term(mo * mi, f * ci);
    }
  }

  friend LaurentPoly operator*(const LaurentPoly& a, const LaurentPoly& b) {
    LaurentPoly r;
    accumulate_product(r, a, b, 1);
    return r;
  }

  LaurentPoly& operator*=(const LaurentPoly& o) { return *this = *this * o; }

  LaurentPoly operator*(const Int& s) const {
    LaurentPoly r;
    if (s == 0) return r;
    r.t_ = t_;
    for (auto& [m, c] : r.t_) c *= s;
    return r;
  }

  LaurentPoly times_monomial(const Monomial& m) const {
    LaurentPoly r;
    r.t_.reserve(t_.size());
    for (const auto& [mm, c] : t_) r.t_.emplace(mm * m, c);
    return r;
  }

  bool operator==(const LaurentPoly& o) const { return t_ == o.t_; }
  bool operator!=(const LaurentPoly& o) const { return !(*this == o); }

  /// Terms in the deterministic monomial order (for printing and hashing).
  std::vector<std::pair<Monomial, Int>> canonical_terms() const {
    std::vector<std::pair<Monomial, Int>> v(t_.begin(), t_.end());
    std::sort(v.begin(), v.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    return v;
  }

  std::uint64_t content_hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& [m, c] : canonical_terms()) {
      h = hash_combine(h, m.hash());
      std::string cs = c.str();
      h = fnv1a(cs.data(), cs.size(), h);
    }
    return h;
  }

  nlohmann::json to_json() const {
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& [m, c] : canonical_terms())
      terms.push_back({{"monomial", m.to_json()}, {"coeff", c.str()}});
    return nlohmann::json{{"terms", terms}};
  }

  static LaurentPoly from_json(const nlohmann::json& j) {
    LaurentPoly p;
    for (const auto& t : j.at("terms"))
      p.add_term(Monomial::from_json(t.at("monomial")), Int(t.at("coeff").get<std::string>()));
    return p;
  }

 private:
  TermMap t_;
};

// ---------------------------------------------------------------------------
// Exact division of Laurent polynomials.
// ---------------------------------------------------------------------------

namespace detail {

/// Per-variable minimum exponent over a polynomial's support (a variable
/// absent from a term counts as exponent zero there).
inline Monomial min_support_monomial(const LaurentPoly& p) {
  struct Acc {
    std::int32_t mn = INT32_MAX;
    std::size_t cnt = 0;
  };
  std::unordered_map<VarKey, Acc> acc;
  for (const auto& [m, c] : p.terms()) {
    for (const auto& [k, e] : m.factors()) {
      auto& a = acc[k];
      a.mn = std::min(a.mn, e);
      ++a.cnt;
    }
  }
  std::vector<Monomial::Factor> fs;
  for (const auto& [k, a] : acc) {
    std::int32_t mn = (a.cnt < p.term_count()) ? std::min(a.mn, 0) : a.mn;
    if (mn != 0) fs.emplace_back(k, mn);
  }
  return Monomial::from_factors(std::move(fs));
}

/// Graded-lexicographic comparison for monomials with nonnegative exponents.
inline bool grlex_less(const Monomial& a, const Monomial& b) {
  std::int64_t da = 0, db = 0;
  for (const auto& [k, e] : a.factors()) da += e;
  for (const auto& [k, e] : b.factors()) db += e;
  if (da != db) return da < db;
  auto ia = a.factors().begin(), ea = a.factors().end();
  auto ib = b.factors().begin(), eb = b.factors().end();
  while (ia != ea && ib != eb) {
    if (ia->first != ib->first) {
      // The earlier variable with a positive exponent is lex-larger.
      return ia->first < ib->first ? false : true;
    }
    if (ia->second != ib->second) return ia->second < ib->second;
    ++ia;
    ++ib;
  }
  return ia == ea && ib != eb;
}

/// Componentwise divisibility for nonnegative-exponent monomials.
inline bool divides(const Monomial& d, const Monomial& m) {
  for (const auto& [k, e] : d.factors())
    if (m.exponent(var_node(k), var_shift(k)) < e) return false;
  return true;
}

}  // namespace detail

/// Compute q with num = q * den, or throw NonExactDivision. den must be nonzero.
inline LaurentPoly exact_divide(const LaurentPoly& num, const LaurentPoly& den) {
  if (den.is_zero()) throw NonExactDivision("division by the zero polynomial");
  if (num.is_zero()) return LaurentPoly::zero();
  // Normalise both operands to honest polynomials with per-variable minimum
  // exponent zero; lowest-degree parts multiply without cancellation, so the
  // quotient of the normalised operands is again an honest polynomial.
  Monomial mn = detail::min_support_monomial(num);
  Monomial md = detail::min_support_monomial(den);
  LaurentPoly n = num.times_monomial(mn.inverse());
  LaurentPoly d = den.times_monomial(md.inverse());

  auto leading = [](const LaurentPoly& p) {
    auto it = p.terms().begin();
    std::pair<Monomial, Int> best = *it;
    for (++it; it != p.terms().end(); ++it)
      if (detail::grlex_less(best.first, it->first)) best = *it;
    return best;
  };
  const auto [dlm, dlc] = leading(d);

  // The residual lives in a hash map; candidate leading monomials sit in a
  // max-heap with a queued flag per entry so each monomial appears at most
  // once (repeated full scans for the leading term would be quadratic).
  struct Cell {
    Int c;
    bool queued = false;
  };
  std::unordered_map<Monomial, Cell, MonomialHash> rem;
  rem.reserve(n.term_count());
  auto cmp = [](const Monomial& a, const Monomial& b) { return detail::grlex_less(a, b); };
  std::priority_queue<Monomial, std::vector<Monomial>, decltype(cmp)> heap(cmp);
  for (const auto& [m, c] : n.terms()) {
    rem[m] = Cell{c, true};
    heap.push(m);
  }

  LaurentPoly q;
  while (!heap.empty()) {
    Monomial rlm = heap.top();
    heap.pop();
    auto it = rem.find(rlm);
    if (it == rem.end()) continue;
    it->second.queued = false;
    if (it->second.c == 0) {
      rem.erase(it);
      continue;
    }
    Int rlc = it->second.c;
    if (!detail::divides(dlm, rlm))
      throw NonExactDivision("leading term " + rlm.to_text() + " not divisible by " + dlm.to_text());
    if (rlc % dlc != 0)
      throw NonExactDivision("leading coefficient not divisible");
    Monomial t = rlm * dlm.inverse();
    Int tc = rlc / dlc;
    q.add_term(t, tc);
    for (const auto& [dm, dc] : d.terms()) {
      Monomial key = t * dm;
      auto [jt, inserted] = rem.try_emplace(key, Cell{Int(0), false});
      jt->second.c -= tc * dc;
      if (jt->second.c == 0) {
        if (!jt->second.queued) rem.erase(jt);
      } else if (!jt->second.queued) {
        jt->second.queued = true;
        heap.push(key);
      }
    }
  }
  for (const auto& [m, cell] : rem)
    if (cell.c != 0) throw NonExactDivision("nonzero remainder after division");
  return q.times_monomial(mn * md.inverse());
}

// ---------------------------------------------------------------------------
// Streamed signed-product enumeration. Character products at rank 4 run to
// tens of millions of terms, far past what a materialized term map can hold,
// so identity checks and censuses walk the products term-by-term instead.
//
// Each monomial is keyed by two additive integer functionals of its exponent
// vector (weights derived deterministically from the variable keys). Being
// additive, the keys order every stream a_i * B monotonically once B is
// sorted, so a heap of per-a_i cursors yields the union of all products in
// nondecreasing key order. Key collisions between distinct monomials are
// harmless: a key class is grouped exactly by monomial before the visitor
// sees it, so results are exact for any weight choice.
// ---------------------------------------------------------------------------

namespace stream_detail {

struct Key {
  long long k1 = 0, k2 = 0;
  friend bool operator<(const Key& a, const Key& b) {
    return a.k1 != b.k1 ? a.k1 < b.k1 : a.k2 < b.k2;
  }
  friend bool operator==(const Key& a, const Key& b) { return a.k1 == b.k1 && a.k2 == b.k2; }
  Key operator+(const Key& o) const { return Key{k1 + o.k1, k2 + o.k2}; }
};

inline long long weight_of(std::uint64_t h) {
  // Center a 58-bit hash slice so keys stay within int64 under summation.
  return static_cast<long long>(h & ((1ull << 58) - 1)) - (1ll << 57);
}

inline Key key_of(const Monomial& m) {
  Key k;
  for (const auto& [vk, e] : m.factors()) {
    long long w1 = weight_of(fnv1a_u64(vk, 0x9e3779b97f4a7c15ull)) >> 20;
    long long w2 = weight_of(fnv1a_u64(vk, 0xc2b2ae3d27d4eb4full)) >> 20;
    k.k1 += w1 * e;
    k.k2 += w2 * e;
  }
  return k;
}

inline Int int128_to_int(__int128 v) {
  bool neg = v < 0;
  unsigned __int128 u = neg ? static_cast<unsigned __int128>(-v) : static_cast<unsigned __int128>(v);
  Int r = Int(static_cast<std::uint64_t>(u >> 64));
  r <<= 64;
  r += Int(static_cast<std::uint64_t>(u));
  return neg ? Int(-r) : r;
}

struct FactorView {
  std::vector<Key> keys;
  std::vector<const Monomial*> monos;
  std::vector<long long> coeffs;
  std::size_t size() const { return monos.size(); }
};

/// Snapshot a polynomial, sorted by key when requested. Coefficients must fit
/// in 62 bits (checked); streamed checks are used on plain characters whose
/// coefficients are small.
inline FactorView view_of(const LaurentPoly& p, bool sorted) {
  std::vector<Key> keys;
  std::vector<const Monomial*> monos;
  std::vector<long long> coeffs;
  keys.reserve(p.term_count());
  monos.reserve(p.term_count());
  coeffs.reserve(p.term_count());
  for (const auto& [m, c] : p.terms()) {
    if (abs(c) > (Int(1) << 62))
      throw Unsupported("coefficient too large for streamed product");
    keys.push_back(key_of(m));
    monos.push_back(&m);
    coeffs.push_back(c.convert_to<long long>());
  }
  std::vector<std::size_t> order(monos.size());
  for (std::size_t idx = 0; idx < order.size(); ++idx) order[idx] = idx;
  if (sorted)
    std::sort(order.begin(), order.end(),
              [&keys](std::size_t x, std::size_t y) { return keys[x] < keys[y]; });
  FactorView out;
  out.keys.reserve(order.size());
  out.monos.reserve(order.size());
  out.coeffs.reserve(order.size());
  for (std::size_t idx : order) {
    out.keys.push_back(keys[idx]);
    out.monos.push_back(monos[idx]);
    out.coeffs.push_back(coeffs[idx]);
  }
  return out;
}

}  // namespace stream_detail

struct SignedProduct {
  const LaurentPoly* a = nullptr;
  const LaurentPoly* b = nullptr;
  long long scale = 1;
};

/// Enumerate the distinct monomials of sum_i scale_i * (A_i * B_i), calling
/// visit(monomial, exact_coefficient) once per monomial (coefficient may be
/// zero after cancellation). Memory stays linear in the factor sizes.
template <class Visit>
void for_each_signed_product_term(const std::vector<SignedProduct>& products, Visit&& visit) {
  using stream_detail::FactorView;
  using stream_detail::Key;

  struct PairData {
    FactorView small, large;
    long long scale;
  };
  std::vector<PairData> pairs;
  for (const auto& sp : products) {
    if (sp.a == nullptr || sp.b == nullptr || sp.scale == 0) continue;
    if (sp.a->is_zero() || sp.b->is_zero()) continue;
    const LaurentPoly* s = sp.a;
    const LaurentPoly* l = sp.b;
    if (s->term_count() > l->term_count()) std::swap(s, l);
    pairs.push_back(PairData{stream_detail::view_of(*s, false),
                             stream_detail::view_of(*l, true), sp.scale});
  }

  struct Cursor {
    Key key;
    std::uint32_t pair_idx;
    std::uint32_t s_idx;
    std::uint32_t l_idx;
  };
  struct CursorGreater {
    bool operator()(const Cursor& x, const Cursor& y) const { return y.key < x.key; }
  };
  std::priority_queue<Cursor, std::vector<Cursor>, CursorGreater> heap;
  for (std::uint32_t pi = 0; pi < pairs.size(); ++pi)
    for (std::uint32_t si = 0; si < pairs[pi].small.size(); ++si)
      heap.push(Cursor{pairs[pi].small.keys[si] + pairs[pi].large.keys[0], pi, si, 0});

  std::vector<std::pair<Monomial, __int128>> group;
  while (!heap.empty()) {
    const Key k0 = heap.top().key;
    group.clear();
    while (!heap.empty() && heap.top().key == k0) {
      Cursor cur = heap.top();
      heap.pop();
      const PairData& pd = pairs[cur.pair_idx];
      Monomial m = (*pd.small.monos[cur.s_idx]) * (*pd.large.monos[cur.l_idx]);
      __int128 add = static_cast<__int128>(pd.small.coeffs[cur.s_idx]) *
                     pd.large.coeffs[cur.l_idx] * pd.scale;
      bool found = false;
      for (auto& [gm, gc] : group) {
        if (gm == m) {
          gc += add;
          found = true;
          break;
        }
      }
      if (!found) group.emplace_back(std::move(m), add);
      if (++cur.l_idx < pd.large.size()) {
        cur.key = pd.small.keys[cur.s_idx] + pd.large.keys[cur.l_idx];
        heap.push(cur);
      }
    }
    for (auto& [gm, gc] : group) visit(gm, stream_detail::int128_to_int(gc));
  }
}

/// Residual report of a streamed identity check: count of surviving terms and
/// a bounded sample of them.
struct StreamedResidual {
  std::size_t nonzero_terms = 0;
  LaurentPoly sample;         // up to sample_cap surviving terms
  static constexpr std::size_t sample_cap = 32;
  bool zero() const { return nonzero_terms == 0; }
};

inline StreamedResidual streamed_residual(const std::vector<SignedProduct>& products) {
  StreamedResidual r;
  for_each_signed_product_term(products, [&r](const Monomial& m, const Int& c) {
    if (c == 0) return;
    ++r.nonzero_terms;
    if (r.sample.term_count() < StreamedResidual::sample_cap) r.sample.add_term(m, c);
  });
  return r;
}

}  // namespace qcw
