#include "carshare/basis_lu.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace carshare::lp {
namespace {

// Lines (rows or columns) kept in doubly linked lists bucketed by count.
class CountBuckets {
 public:
  void reset(std::size_t n) {
    head_.assign(n + 1, -1);
    next_.assign(n, -1);
    prev_.assign(n, -1);
    count_.assign(n, -1);
  }
  void insert(int i, std::size_t c) {
    count_[i] = static_cast<int>(c);
    prev_[i] = -1;
    next_[i] = head_[c];
    if (next_[i] >= 0) prev_[next_[i]] = i;
    head_[c] = i;
  }
  void remove(int i) {
    if (count_[i] < 0) return;
    if (prev_[i] >= 0)
      next_[prev_[i]] = next_[i];
    else
      head_[count_[i]] = next_[i];
    if (next_[i] >= 0) prev_[next_[i]] = prev_[i];
    count_[i] = -1;
  }
  void update(int i, std::size_t c) {
    if (count_[i] == static_cast<int>(c)) return;
    remove(i);
    insert(i, c);
  }
  int first(std::size_t c) const { return head_[c]; }
  int next(int i) const { return next_[i]; }

 private:
  std::vector<int> head_, next_, prev_, count_;
};

constexpr std::size_t dense_row = 48;

}  // namespace

bool BasisLu::factorize(std::size_t m, const std::vector<std::size_t>& start, const std::vector<int>& index,
                        const std::vector<double>& value, const Options& opt) {
  m_ = m;
  prow_.clear();
  pcol_.clear();
  diag_.clear();
  l_ = Factor{};
  urow_ = Factor{};
  ucol_ = Factor{};
  l_.start.push_back(0);
  urow_.start.push_back(0);
  work_.assign(m, 0.0);
  if (m == 0) return true;

  // Active submatrix: values by row, patterns by column. Long rows get a
  // dense column -> position map so updates into them stay O(1).
  std::vector<std::vector<int>> rc(m), cr(m);
  std::vector<std::vector<double>> rv(m);
  std::vector<std::vector<int>> rmap(m);
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t k = start[j]; k < start[j + 1]; ++k) {
      if (value[k] == 0.0) continue;
      const auto i = static_cast<std::size_t>(index[k]);
      rc[i].push_back(static_cast<int>(j));
      rv[i].push_back(value[k]);
      cr[j].push_back(static_cast<int>(i));
    }
  }
  auto ensure_map = [&](std::size_t i) {
    if (!rmap[i].empty() || rc[i].size() < dense_row) return;
    rmap[i].assign(m, -1);
    for (std::size_t pos = 0; pos < rc[i].size(); ++pos) rmap[i][static_cast<std::size_t>(rc[i][pos])] = static_cast<int>(pos);
  };
  for (std::size_t i = 0; i < m; ++i) ensure_map(i);

  std::vector<int> mark(m, -1);  // position map for the short row being updated
  auto find = [&](std::size_t i, std::size_t j) -> int {
    if (!rmap[i].empty()) return rmap[i][j];
    const auto& r = rc[i];
    for (std::size_t pos = 0; pos < r.size(); ++pos)
      if (static_cast<std::size_t>(r[pos]) == j) return static_cast<int>(pos);
    return -1;
  };
  auto erase_at = [&](std::size_t i, std::size_t pos, bool marking) {
    auto& r = rc[i];
    auto& v = rv[i];
    const std::size_t last = r.size() - 1;
    const auto gone = static_cast<std::size_t>(r[pos]);
    const auto moved = static_cast<std::size_t>(r[last]);
    if (!rmap[i].empty()) {
      rmap[i][gone] = -1;
      if (pos != last) rmap[i][moved] = static_cast<int>(pos);
    } else if (marking) {
      mark[gone] = -1;
      if (pos != last) mark[moved] = static_cast<int>(pos);
    }
    r[pos] = r[last];
    v[pos] = v[last];
    r.pop_back();
    v.pop_back();
  };
  auto erase_from_column = [&](std::size_t j, int i) {
    auto& c = cr[j];
    auto it = std::find(c.begin(), c.end(), i);
    if (it != c.end()) {
      *it = c.back();
      c.pop_back();
    }
  };
  auto col_max = [&](std::size_t j) {
    double mx = 0.0;
    for (int i : cr[j]) mx = std::max(mx, std::abs(rv[static_cast<std::size_t>(i)][static_cast<std::size_t>(find(static_cast<std::size_t>(i), j))]));
    return mx;
  };

  CountBuckets rows, cols;
  rows.reset(m);
  cols.reset(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (rc[i].empty() || cr[i].empty()) return false;  // empty row or column
    rows.insert(static_cast<int>(i), rc[i].size());
    cols.insert(static_cast<int>(i), cr[i].size());
  }

  // Markowitz search over lines of increasing count; a pivot must pass the
  // column threshold test.
  auto search = [&](int& p, int& q) {
    p = q = -1;
    double best = std::numeric_limits<double>::infinity();
    std::size_t examined = 0;
    auto consider = [&](std::size_t i, std::size_t j, double a, double mx) {
      if (a <= opt.singular || a < opt.threshold * mx) return;
      const double cost = static_cast<double>(rc[i].size() - 1) * static_cast<double>(cr[j].size() - 1);
      if (cost < best) {
        best = cost;
        p = static_cast<int>(i);
        q = static_cast<int>(j);
      }
    };
    for (std::size_t c = 1; c <= m; ++c) {
      const double floor = static_cast<double>(c - 1) * static_cast<double>(c - 1);
      for (int j = cols.first(c); j >= 0; j = cols.next(j)) {
        const auto uj = static_cast<std::size_t>(j);
        const double mx = col_max(uj);
        for (int i : cr[uj]) {
          const auto ui = static_cast<std::size_t>(i);
          consider(ui, uj, std::abs(rv[ui][static_cast<std::size_t>(find(ui, uj))]), mx);
        }
        ++examined;
        if (p >= 0 && (examined >= opt.search_limit || best <= floor)) return;
      }
      for (int i = rows.first(c); i >= 0; i = rows.next(i)) {
        const auto ui = static_cast<std::size_t>(i);
        for (std::size_t pos = 0; pos < rc[ui].size(); ++pos) {
          const auto uj = static_cast<std::size_t>(rc[ui][pos]);
          const double a = std::abs(rv[ui][pos]);
          if (a <= opt.singular) continue;
          consider(ui, uj, a, col_max(uj));
        }
        ++examined;
        if (p >= 0 && (examined >= opt.search_limit || best <= floor)) return;
      }
      if (p >= 0 && best <= static_cast<double>(c) * static_cast<double>(c)) return;
    }
  };

  std::vector<int> targets;
  for (std::size_t k = 0; k < m; ++k) {
    int ip, iq;
    search(ip, iq);
    if (ip < 0) return false;
    const auto p = static_cast<std::size_t>(ip), q = static_cast<std::size_t>(iq);
    const double piv = rv[p][static_cast<std::size_t>(find(p, q))];
    prow_.push_back(ip);
    pcol_.push_back(iq);
    diag_.push_back(piv);

    const std::size_t u0 = urow_.index.size();
    for (std::size_t pos = 0; pos < rc[p].size(); ++pos) {
      if (static_cast<std::size_t>(rc[p][pos]) == q) continue;
      urow_.index.push_back(rc[p][pos]);
      urow_.value.push_back(rv[p][pos]);
    }
    const std::size_t u1 = urow_.index.size();
    urow_.start.push_back(u1);

    for (int j : rc[p]) erase_from_column(static_cast<std::size_t>(j), ip);
    rows.remove(ip);
    cols.remove(iq);
    targets.swap(cr[q]);
    cr[q].clear();

    for (int it : targets) {
      const auto i = static_cast<std::size_t>(it);
      const int pos_q = find(i, q);
      const double l = rv[i][static_cast<std::size_t>(pos_q)] / piv;
      const bool mapped = !rmap[i].empty();
      if (!mapped)
        for (std::size_t pos = 0; pos < rc[i].size(); ++pos) mark[static_cast<std::size_t>(rc[i][pos])] = static_cast<int>(pos);
      erase_at(i, static_cast<std::size_t>(pos_q), true);
      l_.index.push_back(it);
      l_.value.push_back(l);

      auto& pos_of = mapped ? rmap[i] : mark;
      for (std::size_t e = u0; e < u1; ++e) {
        const auto j = static_cast<std::size_t>(urow_.index[e]);
        const int ps = pos_of[j];
        if (ps >= 0) {
          rv[i][static_cast<std::size_t>(ps)] -= l * urow_.value[e];
        } else {
          pos_of[j] = static_cast<int>(rc[i].size());
          rc[i].push_back(static_cast<int>(j));
          rv[i].push_back(-l * urow_.value[e]);
          cr[j].push_back(it);
        }
      }
      for (std::size_t e = u0; e < u1; ++e) {
        const auto j = static_cast<std::size_t>(urow_.index[e]);
        const int ps = pos_of[j];
        if (ps >= 0 && std::abs(rv[i][static_cast<std::size_t>(ps)]) < opt.drop) {
          erase_at(i, static_cast<std::size_t>(ps), true);
          erase_from_column(j, it);
        }
      }
      if (!mapped)
        for (int j : rc[i]) mark[static_cast<std::size_t>(j)] = -1;
      rows.update(it, rc[i].size());
      ensure_map(i);
    }
    l_.start.push_back(l_.index.size());
    for (std::size_t e = u0; e < u1; ++e) {
      const auto j = static_cast<std::size_t>(urow_.index[e]);
      cols.update(urow_.index[e], cr[j].size());
    }
    rc[p].clear();
    rv[p].clear();
    rmap[p].clear();
    rmap[p].shrink_to_fit();
  }

  // Column-wise copy of U for the forward solve.
  std::vector<std::size_t> step_of_col(m);
  for (std::size_t k = 0; k < m; ++k) step_of_col[static_cast<std::size_t>(pcol_[k])] = k;
  ucol_.start.assign(m + 1, 0);
  for (int j : urow_.index) ++ucol_.start[step_of_col[static_cast<std::size_t>(j)] + 1];
  for (std::size_t k = 0; k < m; ++k) ucol_.start[k + 1] += ucol_.start[k];
  ucol_.index.resize(urow_.index.size());
  ucol_.value.resize(urow_.index.size());
  std::vector<std::size_t> fill(ucol_.start.begin(), ucol_.start.end() - 1);
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t e = urow_.start[k]; e < urow_.start[k + 1]; ++e) {
      const std::size_t s = step_of_col[static_cast<std::size_t>(urow_.index[e])];
      ucol_.index[fill[s]] = prow_[k];
      ucol_.value[fill[s]++] = urow_.value[e];
    }
  }
  return true;
}

void BasisLu::solve(std::vector<double>& v) const {
  for (std::size_t k = 0; k < m_; ++k) {
    const double t = v[static_cast<std::size_t>(prow_[k])];
    if (t == 0.0) continue;
    for (std::size_t e = l_.start[k]; e < l_.start[k + 1]; ++e)
      v[static_cast<std::size_t>(l_.index[e])] -= l_.value[e] * t;
  }
  for (std::size_t k = m_; k-- > 0;) {
    const double x = v[static_cast<std::size_t>(prow_[k])] / diag_[k];
    work_[static_cast<std::size_t>(pcol_[k])] = x;
    if (x == 0.0) continue;
    for (std::size_t e = ucol_.start[k]; e < ucol_.start[k + 1]; ++e)
      v[static_cast<std::size_t>(ucol_.index[e])] -= ucol_.value[e] * x;
  }
  std::copy(work_.begin(), work_.end(), v.begin());
}

void BasisLu::solve_transposed(std::vector<double>& v) const {
  for (std::size_t k = 0; k < m_; ++k) {
    const double z = v[static_cast<std::size_t>(pcol_[k])] / diag_[k];
    work_[static_cast<std::size_t>(prow_[k])] = z;
    if (z == 0.0) continue;
    for (std::size_t e = urow_.start[k]; e < urow_.start[k + 1]; ++e)
      v[static_cast<std::size_t>(urow_.index[e])] -= urow_.value[e] * z;
  }
  for (std::size_t k = m_; k-- > 0;) {
    double acc = 0.0;
    for (std::size_t e = l_.start[k]; e < l_.start[k + 1]; ++e)
      acc += l_.value[e] * work_[static_cast<std::size_t>(l_.index[e])];
    work_[static_cast<std::size_t>(prow_[k])] -= acc;
  }
  std::copy(work_.begin(), work_.end(), v.begin());
}

std::size_t BasisLu::nonzeros() const { return l_.index.size() + urow_.index.size() + m_; }

}  // namespace carshare::lp
