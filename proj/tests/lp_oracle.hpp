#pragma once

// Test-only oracles for the simplex: brute-force vertex enumeration over
// small bounded LPs and a random LP generator.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "carshare/lp.hpp"

namespace carshare::oracle {

struct Hyperplane {
  std::vector<double> a;
  double b;
};

// Solves the dense n x n system in place with partial pivoting; nullopt if
// singular.
inline std::optional<std::vector<double>> solve_dense(std::vector<std::vector<double>> m,
                                                      std::vector<double> rhs) {
  const std::size_t n = rhs.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
    if (std::abs(m[piv][c]) < 1e-10) return std::nullopt;
    std::swap(m[piv], m[c]);
    std::swap(rhs[piv], rhs[c]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = m[r][c] / m[c][c];
      if (f == 0.0) continue;
      for (std::size_t k = c; k < n; ++k) m[r][k] -= f * m[c][k];
      rhs[r] -= f * rhs[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = rhs[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= m[i][k] * x[k];
    x[i] = s / m[i][i];
  }
  return x;
}

struct OracleResult {
  bool feasible = false;
  double objective = 0.0;
  std::vector<double> x;
};

// Enumerates every basic solution of an LP whose columns all have finite
// bounds. Equality rows are active in every vertex.
inline OracleResult enumerate_vertices(const lp::StandardFormLp& p) {
  const std::size_t n = p.num_cols();
  std::vector<std::vector<double>> dense(p.num_rows(), std::vector<double>(n, 0.0));
  for (const auto& e : p.entries) dense[e.row][e.col] += e.value;

  std::vector<Hyperplane> forced, optional_planes;
  for (std::size_t r = 0; r < p.num_rows(); ++r) {
    const double lo = p.rows[r].lower(), hi = p.rows[r].upper();
    if (lo == hi) {
      forced.push_back({dense[r], lo});
      continue;
    }
    if (std::isfinite(lo)) optional_planes.push_back({dense[r], lo});
    if (std::isfinite(hi)) optional_planes.push_back({dense[r], hi});
  }
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> e(n, 0.0);
    e[j] = 1.0;
    if (p.lower[j] == p.upper[j]) {
      forced.push_back({e, p.lower[j]});
      continue;
    }
    optional_planes.push_back({e, p.lower[j]});
    optional_planes.push_back({e, p.upper[j]});
  }

  auto feasible = [&](const std::vector<double>& x) {
    for (std::size_t j = 0; j < n; ++j)
      if (x[j] < p.lower[j] - 1e-7 || x[j] > p.upper[j] + 1e-7) return false;
    for (std::size_t r = 0; r < p.num_rows(); ++r) {
      double act = 0.0;
      for (std::size_t j = 0; j < n; ++j) act += dense[r][j] * x[j];
      if (act < p.rows[r].lower() - 1e-7 || act > p.rows[r].upper() + 1e-7) return false;
    }
    return true;
  };

  OracleResult best;
  if (forced.size() > n) {
    // Over-determined equalities: try each n-subset of the forced planes is
    // overkill here; generators keep equality counts below n.
    return best;
  }
  const std::size_t need = n - forced.size();
  const std::size_t k = optional_planes.size();
  if (need > k) return best;
  std::vector<std::size_t> pick(need);
  for (std::size_t i = 0; i < need; ++i) pick[i] = i;
  while (true) {
    std::vector<std::vector<double>> m;
    std::vector<double> rhs;
    for (const auto& h : forced) {
      m.push_back(h.a);
      rhs.push_back(h.b);
    }
    for (auto i : pick) {
      m.push_back(optional_planes[i].a);
      rhs.push_back(optional_planes[i].b);
    }
    if (auto x = solve_dense(m, rhs); x && feasible(*x)) {
      double obj = 0.0;
      for (std::size_t j = 0; j < n; ++j) obj += p.cost[j] * (*x)[j];
      if (!best.feasible || obj < best.objective) {
        best.feasible = true;
        best.objective = obj;
        best.x = *x;
      }
    }
    // next combination
    std::size_t i = need;
    while (i > 0 && pick[i - 1] == k - need + i - 1) --i;
    if (i == 0) break;
    ++pick[i - 1];
    for (std::size_t t = i; t < need; ++t) pick[t] = pick[t - 1] + 1;
  }
  return best;
}

// Random small LP with boxed columns. Integer data keeps vertices well
// conditioned.
inline lp::StandardFormLp random_lp(std::uint64_t seed, std::size_t max_cols = 8,
                                    std::size_t max_rows = 4) {
  std::mt19937_64 gen(seed);
  auto uni = [&](int lo, int hi) {
    return lo + static_cast<int>(gen() % static_cast<std::uint64_t>(hi - lo + 1));
  };
  lp::StandardFormLp p;
  p.name = "RAND";
  const auto n = static_cast<std::size_t>(uni(1, static_cast<int>(max_cols)));
  const auto m = static_cast<std::size_t>(uni(1, static_cast<int>(max_rows)));
  for (std::size_t j = 0; j < n; ++j) {
    const double lo = uni(-3, 0);
    const double hi = uni(0, 4) == 0 ? lo : uni(1, 6);
    p.add_column("x" + std::to_string(j), uni(-5, 5), lo, hi);
  }
  std::size_t eq_rows = 0;
  for (std::size_t r = 0; r < m; ++r) {
    int kind = uni(0, 5);
    lp::RowSense s = kind <= 2 ? lp::RowSense::le : kind <= 4 ? lp::RowSense::ge : lp::RowSense::eq;
    if (s == lp::RowSense::eq && eq_rows + 1 >= n) s = lp::RowSense::le;
    if (s == lp::RowSense::eq) ++eq_rows;
    auto row = p.add_row("r" + std::to_string(r), s, uni(-6, 8));
    if (uni(0, 6) == 0 && s != lp::RowSense::eq) p.rows[row].range = uni(1, 5);
    for (std::size_t j = 0; j < n; ++j)
      if (uni(0, 2) != 0) p.add_entry(row, j, uni(-5, 5));
  }
  return p;
}

}  // namespace carshare::oracle
