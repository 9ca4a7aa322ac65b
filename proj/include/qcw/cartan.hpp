#pragma once
// Cartan data for the symplectic series: Cartan matrix, symmetrizing lengths,
// and the symmetrized pairing used by quiver construction.

#include "qcw/core.hpp"

#include <nlohmann/json.hpp>

#include <vector>

namespace qcw {

/// Cartan matrix C, node lengths d, and rank n for type C_n (n >= 2).
/// Nodes are 1-based in the public API (matching the variable labels).
struct CartanData {
  int n = 0;
  std::vector<std::vector<int>> C;  // (n+1) x (n+1); row/col 0 unused
  std::vector<int> d;               // size n+1; d[0] unused

  int cartan(int i, int j) const {
    check_node(i);
    check_node(j);
    return C[i][j];
  }

  /// Symmetrized pairing b_ij = d_i * c_ij (so b is a symmetric matrix).
  int b(int i, int j) const { return d[i] * cartan(i, j); }

  int length(int i) const {
    check_node(i);
    return d[i];
  }

  void check_node(int i) const {
    if (i < 1 || i > n) throw InvalidNode("node index " + std::to_string(i) + " out of range 1.." + std::to_string(n));
  }
};

/// Build type-C_n Cartan data: path graph with the doubled tail bond.
/// c_{i,i+1} = -1 for i < n-1, c_{n-1,n} = -2, c_{i+1,i} = -1, d = (1,..,1,2).
inline CartanData build_type_c(int n) {
  if (n < 2) throw InvalidRank("type C requires rank >= 2, got " + std::to_string(n));
  CartanData cd;
  cd.n = n;
  cd.C.assign(n + 1, std::vector<int>(n + 1, 0));
  cd.d.assign(n + 1, 1);
  for (int i = 1; i <= n; ++i) cd.C[i][i] = 2;
  for (int i = 1; i <= n - 1; ++i) {
    cd.C[i][i + 1] = (i == n - 1) ? -2 : -1;
    cd.C[i + 1][i] = -1;
  }
  cd.d[n] = 2;
  return cd;
}

inline nlohmann::json to_json(const CartanData& cd) {
  nlohmann::json jc = nlohmann::json::array();
  for (int i = 1; i <= cd.n; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 1; j <= cd.n; ++j) row.push_back(cd.C[i][j]);
    jc.push_back(row);
  }
  nlohmann::json jd = nlohmann::json::array();
  for (int i = 1; i <= cd.n; ++i) jd.push_back(cd.d[i]);
  return nlohmann::json{{"rank", cd.n}, {"C", jc}, {"d", jd}};
}

}  // namespace qcw
