#pragma once
// Rank-one building blocks: strings (q-segments), general position, the
// canonical decomposition of a dominant monomial into strings, and the
// (k+1)-term ladder character of a single string. The node-graded engine in
// qchar.hpp reuses the run decomposition with a scaled step.

#include "qcw/core.hpp"
#include "qcw/monomial.hpp"
#include "qcw/polynomial.hpp"

#include <algorithm>
#include <map>
#include <vector>

namespace qcw {

// ---------------------------------------------------------------------------
// Step-agnostic run decomposition (shared with the node-graded engine).
// ---------------------------------------------------------------------------

namespace sl2core {

/// A run of consecutive members bottom, bottom+step, ..., bottom+step*(len-1).
struct Run {
  int bottom = 0;
  int len = 0;
  int step = 2;

  int top() const { return bottom + step * (len - 1); }
};

/// Greedy top-down decomposition of a positive-exponent shift profile into
/// maximal runs. Any two resulting runs are nested or separated, which is
/// exactly pairwise general position.
inline std::vector<Run> decompose(std::map<int, int> exps, int step) {
  std::vector<Run> runs;
  while (!exps.empty()) {
    int top = exps.rbegin()->first;
    int bottom = top;
    while (true) {
      auto it = exps.find(bottom - step);
      if (it == exps.end() || it->second <= 0) break;
      bottom -= step;
    }
    Run r{bottom, (top - bottom) / step + 1, step};
    for (int t = bottom; t <= top; t += step) {
      auto it = exps.find(t);
      if (--(it->second) == 0) exps.erase(it);
    }
    runs.push_back(r);
  }
  std::sort(runs.begin(), runs.end(), [](const Run& a, const Run& b) {
    return a.bottom != b.bottom ? a.bottom < b.bottom : a.len < b.len;
  });
  return runs;
}

/// Descent positions of the ladder over a run: the j-th downward move
/// multiplies by A^{-1} anchored at top+delta-step*j (delta = step/2),
/// for j = 0..len-1; prefixes of this list index the ladder rungs.
inline std::vector<int> descent_shifts(const Run& r) {
  std::vector<int> d(static_cast<std::size_t>(r.len));
  int delta = r.step / 2;
  for (int j = 0; j < r.len; ++j) d[static_cast<std::size_t>(j)] = r.top() + delta - r.step * j;
  return d;
}

}  // namespace sl2core

// ---------------------------------------------------------------------------
// Public rank-one API (step 2, node label 1).
// ---------------------------------------------------------------------------

/// String with members a_shift - 1 + 2i for i = 0..length-1.
struct Sl2String {
  int a_shift = 0;
  int length = 1;

  int bottom() const { return a_shift - 1; }
  int top() const { return a_shift - 1 + 2 * (length - 1); }

  std::vector<int> members() const {
    std::vector<int> v(static_cast<std::size_t>(length));
    for (int i = 0; i < length; ++i) v[static_cast<std::size_t>(i)] = a_shift - 1 + 2 * i;
    return v;
  }

  Monomial head() const {
    std::vector<Monomial::Factor> fs;
    for (int m : members()) fs.emplace_back(var_key(1, m), 1);
    return Monomial::from_factors(std::move(fs));
  }

  bool operator==(const Sl2String& o) const {
    return a_shift == o.a_shift && length == o.length;
  }
};

inline bool string_contains(const Sl2String& outer, const Sl2String& inner) {
  if (((outer.bottom() - inner.bottom()) & 1) != 0) return false;
  return inner.bottom() >= outer.bottom() && inner.top() <= outer.top();
}

/// Two strings are in general position iff their union is not a single string
/// or one contains the other.
inline bool general_position(const Sl2String& a, const Sl2String& b) {
  if (a.length < 1 || b.length < 1) throw InvalidLabel("string length must be positive");
  if (string_contains(a, b) || string_contains(b, a)) return true;
  bool same_class = ((a.bottom() - b.bottom()) & 1) == 0;
  bool union_is_string =
      same_class && std::max(a.bottom(), b.bottom()) <= std::min(a.top(), b.top()) + 2;
  return !union_is_string;
}

/// Canonical decomposition of a dominant rank-one monomial into strings that
/// are pairwise in general position. All factors must sit at one node.
inline std::vector<Sl2String> string_decompose(const Monomial& m) {
  std::map<int, int> exps;
  int node = -1;
  for (const auto& [k, e] : m.factors()) {
    if (e < 0) throw NotDominant("monomial " + m.to_text() + " has a negative exponent");
    if (node == -1) node = var_node(k);
    if (var_node(k) != node)
      throw InvalidLabel("rank-one decomposition requires a single node, got " + m.to_text());
    exps[var_shift(k)] = e;
  }
  std::vector<Sl2String> out;
  for (const auto& r : sl2core::decompose(std::move(exps), 2))
    out.push_back(Sl2String{r.bottom + 1, r.len});
  // Canonical order: by maximal member descending, then length descending.
  std::sort(out.begin(), out.end(), [](const Sl2String& a, const Sl2String& b) {
    return a.top() != b.top() ? a.top() > b.top() : a.length > b.length;
  });
  return out;
}

/// Ladder character of the length-k string anchored at a_shift: k+1 terms,
/// rung r multiplies the head by the first r descent factors A^{-1}, where
/// A anchored at t is Y_{t-1} Y_{t+1}.
inline LaurentPoly kr_qchar(int a_shift, int k) {
  if (k < 0) throw InvalidLabel("string length must be nonnegative");
  if (k == 0) return LaurentPoly::one();
  Sl2String s{a_shift, k};
  Monomial cur = s.head();
  LaurentPoly chi = LaurentPoly::from_monomial(cur);
  for (int d : sl2core::descent_shifts(sl2core::Run{s.bottom(), k, 2})) {
    Monomial a = Monomial::from_factors({{var_key(1, d - 1), 1}, {var_key(1, d + 1), 1}});
    cur = cur * a.inverse();
    chi.add_term(cur, 1);
  }
  return chi;
}

inline LaurentPoly kr_qchar(const Sl2String& s) { return kr_qchar(s.a_shift, s.length); }

/// Character of the simple module with dominant highest monomial m: the
/// product of the ladder characters of its canonical string decomposition.
inline LaurentPoly sl2_qchar(const Monomial& m) {
  LaurentPoly chi = LaurentPoly::one();
  for (const auto& s : string_decompose(m)) chi *= kr_qchar(s);
  return chi;
}

/// Node restriction: the ring homomorphism killing Y_{k,s} for k != j and
/// renaming Y_{j,s} to the rank-one variable (node label 1). Coefficients of
/// collapsing monomials combine additively and may cancel.
inline LaurentPoly beta(const LaurentPoly& p, int j) {
  LaurentPoly out;
  for (const auto& [m, c] : p.terms()) {
    std::vector<Monomial::Factor> fs;
    for (const auto& [k, e] : m.factors())
      if (var_node(k) == j) fs.emplace_back(var_key(1, var_shift(k)), e);
    out.add_term(Monomial::from_factors(std::move(fs)), c);
  }
  return out;
}

}  // namespace qcw
