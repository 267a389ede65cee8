// Bounded revised primal simplex.
//
// The problem is brought to the form [A  -I] z = 0 with one logical variable
// per row carrying the row bounds, so every variable (structural or logical)
// simply has a [lo, hi] box. The initial basis is the all-logical one; phase 1
// minimizes the sum of basic infeasibilities (no artificial columns), phase 2
// the scaled objective. The basis is factorized with a sparse LU every
// `refactor_interval` pivots and updated in product form in between.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "carshare/basis_lu.hpp"
#include "carshare/error.hpp"
#include "carshare/lp.hpp"

namespace carshare::lp {
namespace {

enum class VarStatus : std::uint8_t { basic, at_lower, at_upper, free_zero, fixed };

struct Compressed {
  std::vector<std::size_t> start;
  std::vector<int> index;
  std::vector<double> value;
};

// Scaled problem with structurals [0, n) and logicals [n, n+m).
struct Scaled {
  std::size_t m = 0;
  std::size_t n = 0;
  Compressed cols;  // column-major structural matrix
  Compressed rows;  // row-major copy
  std::vector<double> cost;
  std::vector<double> lo;
  std::vector<double> hi;
  std::vector<double> col_scale;
  std::vector<double> row_scale;
  double obj_scale = 1.0;
};

double pow2_round(double s) {
  if (!(s > 0.0) || !std::isfinite(s)) return 1.0;
  return std::exp2(std::round(std::log2(s)));
}

Scaled build_scaled(const StandardFormLp& p, bool scale) {
  Scaled s;
  s.m = p.num_rows();
  s.n = p.num_cols();
  const std::size_t m = s.m, n = s.n;

  // Sum duplicates, drop explicit zeros, sort column-major.
  std::vector<Entry> e(p.entries);
  std::sort(e.begin(), e.end(), [](const Entry& a, const Entry& b) {
    return a.col != b.col ? a.col < b.col : a.row < b.row;
  });
  std::vector<Entry> merged;
  merged.reserve(e.size());
  for (const auto& x : e) {
    if (!merged.empty() && merged.back().col == x.col && merged.back().row == x.row)
      merged.back().value += x.value;
    else
      merged.push_back(x);
  }
  std::erase_if(merged, [](const Entry& x) { return x.value == 0.0; });

  s.col_scale.assign(n, 1.0);
  s.row_scale.assign(m, 1.0);
  if (scale && !merged.empty()) {
    for (int pass = 0; pass < 6; ++pass) {
      std::vector<double> rmax(m, 0.0), rmin(m, inf);
      for (const auto& x : merged) {
        double a = std::abs(x.value) * s.col_scale[x.col];
        rmax[x.row] = std::max(rmax[x.row], a);
        rmin[x.row] = std::min(rmin[x.row], a);
      }
      for (std::size_t r = 0; r < m; ++r)
        if (rmax[r] > 0.0) s.row_scale[r] = 1.0 / std::sqrt(rmax[r] * rmin[r]);
      std::vector<double> cmax(n, 0.0), cmin(n, inf);
      for (const auto& x : merged) {
        double a = std::abs(x.value) * s.row_scale[x.row];
        cmax[x.col] = std::max(cmax[x.col], a);
        cmin[x.col] = std::min(cmin[x.col], a);
      }
      for (std::size_t j = 0; j < n; ++j)
        if (cmax[j] > 0.0) s.col_scale[j] = 1.0 / std::sqrt(cmax[j] * cmin[j]);
    }
    for (auto& v : s.row_scale) v = pow2_round(v);
    for (auto& v : s.col_scale) v = pow2_round(v);
  }

  s.cols.start.assign(n + 1, 0);
  for (const auto& x : merged) ++s.cols.start[x.col + 1];
  std::partial_sum(s.cols.start.begin(), s.cols.start.end(), s.cols.start.begin());
  s.cols.index.resize(merged.size());
  s.cols.value.resize(merged.size());
  for (std::size_t k = 0; k < merged.size(); ++k) {
    const auto& x = merged[k];
    s.cols.index[k] = static_cast<int>(x.row);
    s.cols.value[k] = x.value * s.row_scale[x.row] * s.col_scale[x.col];
  }

  s.rows.start.assign(m + 1, 0);
  for (const auto& x : merged) ++s.rows.start[x.row + 1];
  std::partial_sum(s.rows.start.begin(), s.rows.start.end(), s.rows.start.begin());
  s.rows.index.resize(merged.size());
  s.rows.value.resize(merged.size());
  std::vector<std::size_t> fill(s.rows.start.begin(), s.rows.start.end() - 1);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = s.cols.start[j]; k < s.cols.start[j + 1]; ++k) {
      auto r = static_cast<std::size_t>(s.cols.index[k]);
      s.rows.index[fill[r]] = static_cast<int>(j);
      s.rows.value[fill[r]++] = s.cols.value[k];
    }
  }

  s.cost.assign(n + m, 0.0);
  s.lo.assign(n + m, 0.0);
  s.hi.assign(n + m, 0.0);
  double cmax = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    s.cost[j] = p.cost[j] * s.col_scale[j];
    cmax = std::max(cmax, std::abs(s.cost[j]));
    s.lo[j] = p.lower[j] / s.col_scale[j];
    s.hi[j] = p.upper[j] / s.col_scale[j];
  }
  s.obj_scale = (scale && cmax > 0.0) ? pow2_round(cmax) : 1.0;
  for (std::size_t j = 0; j < n; ++j) s.cost[j] /= s.obj_scale;
  for (std::size_t r = 0; r < m; ++r) {
    s.lo[n + r] = p.rows[r].lower() * s.row_scale[r];
    s.hi[n + r] = p.rows[r].upper() * s.row_scale[r];
  }
  return s;
}

class Simplex {
 public:
  Simplex(const Scaled& s, const SimplexOptions& opt) : s_(s), opt_(opt) {
    m_ = s.m;
    n_ = s.n;
    total_ = n_ + m_;
    max_iter_ = opt.max_iterations ? opt.max_iterations : 50 * total_ + 10000;
    status_.assign(total_, VarStatus::at_lower);
    x_.assign(total_, 0.0);
    head_.resize(m_);
    pos_.assign(total_, -1);
    weight_.assign(total_, 1.0);
    d_.assign(total_, 0.0);
    for (std::size_t j = 0; j < n_; ++j) set_nonbasic_default(j);
    for (std::size_t r = 0; r < m_; ++r) {
      head_[r] = static_cast<int>(n_ + r);
      pos_[n_ + r] = static_cast<int>(r);
      status_[n_ + r] = VarStatus::basic;
    }
    // Feasibility tolerances relative to the bound magnitude.
    lo_tol_.resize(total_);
    hi_tol_.resize(total_);
    for (std::size_t j = 0; j < total_; ++j) {
      lo_tol_[j] = opt.primal_tolerance * std::max(1.0, std::isfinite(s.lo[j]) ? std::abs(s.lo[j]) : 0.0);
      hi_tol_[j] = opt.primal_tolerance * std::max(1.0, std::isfinite(s.hi[j]) ? std::abs(s.hi[j]) : 0.0);
    }
    work_.assign(m_, 0.0);
    row_alpha_.assign(total_, 0.0);
  }

  Status run();

  std::size_t iterations() const { return iter_; }
  std::size_t phase_one_iterations() const { return phase1_iter_; }
  const std::vector<double>& values() const { return x_; }
  const std::vector<double>& duals() const { return y_; }
  std::vector<std::string>& log() { return log_; }

 private:
  void set_nonbasic_default(std::size_t j) {
    const double lo = s_.lo[j], hi = s_.hi[j];
    if (lo == hi) {
      status_[j] = VarStatus::fixed;
      x_[j] = lo;
    } else if (std::isfinite(lo)) {
      status_[j] = VarStatus::at_lower;
      x_[j] = lo;
    } else if (std::isfinite(hi)) {
      status_[j] = VarStatus::at_upper;
      x_[j] = hi;
    } else {
      status_[j] = VarStatus::free_zero;
      x_[j] = 0.0;
    }
  }

  // Column j of [A -I] dotted with dense v.
  double column_dot(std::size_t j, const std::vector<double>& v) const {
    if (j >= n_) return -v[j - n_];
    double acc = 0.0;
    for (std::size_t k = s_.cols.start[j]; k < s_.cols.start[j + 1]; ++k)
      acc += s_.cols.value[k] * v[static_cast<std::size_t>(s_.cols.index[k])];
    return acc;
  }

  void scatter_column(std::size_t j, std::vector<double>& v) const {
    std::fill(v.begin(), v.end(), 0.0);
    if (j >= n_) {
      v[j - n_] = -1.0;
      return;
    }
    for (std::size_t k = s_.cols.start[j]; k < s_.cols.start[j + 1]; ++k)
      v[static_cast<std::size_t>(s_.cols.index[k])] = s_.cols.value[k];
  }

  bool factorize();
  void ftran(std::vector<double>& v) const;
  void btran(std::vector<double>& v) const;
  void recompute_basics();
  double infeasibility(std::size_t j) const {
    const double v = x_[j];
    if (v < s_.lo[j] - lo_tol_[j]) return s_.lo[j] - v;
    if (v > s_.hi[j] + hi_tol_[j]) return v - s_.hi[j];
    return 0.0;
  }
  double total_infeasibility() const {
    double t = 0.0;
    for (std::size_t i = 0; i < m_; ++i) t += infeasibility(static_cast<std::size_t>(head_[i]));
    return t;
  }
  double phase_cost(std::size_t j) const {
    if (phase_ == 2) return s_.cost[j];
    const double v = x_[j];
    if (v < s_.lo[j] - lo_tol_[j]) return -1.0;
    if (v > s_.hi[j] + hi_tol_[j]) return 1.0;
    return 0.0;
  }
  void compute_duals();
  void compute_pivot_row(std::size_t p);
  long choose_entering() const;
  bool attractive(std::size_t j) const {
    const double dj = d_[j];
    switch (status_[j]) {
      case VarStatus::at_lower: return dj < -opt_.dual_tolerance;
      case VarStatus::at_upper: return dj > opt_.dual_tolerance;
      case VarStatus::free_zero: return std::abs(dj) > opt_.dual_tolerance;
      default: return false;
    }
  }
  void checkpoint() {
    saved_head_ = head_;
    saved_status_ = status_;
    saved_x_ = x_;
  }
  void restore_checkpoint() {
    head_ = saved_head_;
    status_ = saved_status_;
    x_ = saved_x_;
    std::fill(pos_.begin(), pos_.end(), -1);
    for (std::size_t i = 0; i < m_; ++i) pos_[static_cast<std::size_t>(head_[i])] = static_cast<int>(i);
  }

  struct Eta {
    std::size_t pivot;
    double pivot_value;
    std::vector<int> index;
    std::vector<double> value;
  };

  const Scaled& s_;
  const SimplexOptions& opt_;
  std::size_t m_ = 0, n_ = 0, total_ = 0;
  std::size_t iter_ = 0, phase1_iter_ = 0, max_iter_ = 0;
  int phase_ = 1;
  std::vector<VarStatus> status_;
  std::vector<double> x_;
  std::vector<int> head_;
  std::vector<int> pos_;
  std::vector<double> weight_;
  std::vector<double> lo_tol_, hi_tol_;
  std::vector<double> d_;
  std::vector<double> y_;
  std::vector<double> work_;
  std::vector<double> row_alpha_;
  std::vector<std::size_t> row_touched_;
  std::vector<double> rho_;
  BasisLu lu_;
  std::vector<std::size_t> basis_start_;
  std::vector<int> basis_index_;
  std::vector<double> basis_value_;
  std::vector<Eta> etas_;
  std::vector<int> saved_head_;
  std::vector<VarStatus> saved_status_;
  std::vector<double> saved_x_;
  bool bland_ = false;
  std::size_t degenerate_run_ = 0;
  std::vector<std::string> log_;
};

bool Simplex::factorize() {
  etas_.clear();
  if (m_ == 0) return true;
  basis_start_.assign(1, 0);
  basis_index_.clear();
  basis_value_.clear();
  for (std::size_t i = 0; i < m_; ++i) {
    const auto j = static_cast<std::size_t>(head_[i]);
    if (j >= n_) {
      basis_index_.push_back(static_cast<int>(j - n_));
      basis_value_.push_back(-1.0);
    } else {
      for (std::size_t k = s_.cols.start[j]; k < s_.cols.start[j + 1]; ++k) {
        basis_index_.push_back(s_.cols.index[k]);
        basis_value_.push_back(s_.cols.value[k]);
      }
    }
    basis_start_.push_back(basis_index_.size());
  }
  return lu_.factorize(m_, basis_start_, basis_index_, basis_value_);
}

void Simplex::ftran(std::vector<double>& v) const {
  if (m_ == 0) return;
  lu_.solve(v);
  for (const auto& e : etas_) {
    double t = v[e.pivot];
    if (t == 0.0) continue;
    t /= e.pivot_value;
    v[e.pivot] = t;
    for (std::size_t k = 0; k < e.index.size(); ++k)
      v[static_cast<std::size_t>(e.index[k])] -= e.value[k] * t;
  }
}

void Simplex::btran(std::vector<double>& v) const {
  if (m_ == 0) return;
  for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
    double acc = v[it->pivot];
    for (std::size_t k = 0; k < it->index.size(); ++k)
      acc -= it->value[k] * v[static_cast<std::size_t>(it->index[k])];
    v[it->pivot] = acc / it->pivot_value;
  }
  lu_.solve_transposed(v);
}

void Simplex::recompute_basics() {
  std::vector<double> rhs(m_, 0.0);
  for (std::size_t j = 0; j < total_; ++j) {
    if (status_[j] == VarStatus::basic || x_[j] == 0.0) continue;
    if (j >= n_) {
      rhs[j - n_] += x_[j];
    } else {
      for (std::size_t k = s_.cols.start[j]; k < s_.cols.start[j + 1]; ++k)
        rhs[static_cast<std::size_t>(s_.cols.index[k])] -= s_.cols.value[k] * x_[j];
    }
  }
  ftran(rhs);
  for (std::size_t i = 0; i < m_; ++i) x_[static_cast<std::size_t>(head_[i])] = rhs[i];
}

void Simplex::compute_duals() {
  y_.assign(m_, 0.0);
  for (std::size_t i = 0; i < m_; ++i) y_[i] = phase_cost(static_cast<std::size_t>(head_[i]));
  btran(y_);
  for (std::size_t j = 0; j < total_; ++j) {
    if (status_[j] == VarStatus::basic) {
      d_[j] = 0.0;
      continue;
    }
    d_[j] = phase_cost(j) - column_dot(j, y_);
  }
}

// Row p of B^-1 [A -I], scattered into row_alpha_ (only nonbasic entries).
void Simplex::compute_pivot_row(std::size_t p) {
  for (auto j : row_touched_) row_alpha_[j] = 0.0;
  row_touched_.clear();
  rho_.assign(m_, 0.0);
  rho_[p] = 1.0;
  btran(rho_);
  for (std::size_t r = 0; r < m_; ++r) {
    const double rr = rho_[r];
    if (std::abs(rr) < 1e-13) continue;
    for (std::size_t k = s_.rows.start[r]; k < s_.rows.start[r + 1]; ++k) {
      auto j = static_cast<std::size_t>(s_.rows.index[k]);
      if (row_alpha_[j] == 0.0) row_touched_.push_back(j);
      row_alpha_[j] += rr * s_.rows.value[k];
      if (row_alpha_[j] == 0.0) row_alpha_[j] = 1e-300;
    }
    const std::size_t logical = n_ + r;
    row_alpha_[logical] = -rr;
    row_touched_.push_back(logical);
  }
}

long Simplex::choose_entering() const {
  long best = -1;
  double best_score = 0.0;
  for (std::size_t j = 0; j < total_; ++j) {
    if (!attractive(j)) continue;
    if (bland_) return static_cast<long>(j);
    const double score = d_[j] * d_[j] / weight_[j];
    if (score > best_score) {
      best_score = score;
      best = static_cast<long>(j);
    }
  }
  return best;
}

Status Simplex::run() {
  if (!factorize()) throw LpError("initial basis factorization failed");
  checkpoint();
  recompute_basics();
  phase_ = total_infeasibility() > 0.0 ? 1 : 2;
  compute_duals();
  bool duals_fresh = true;
  double last_objective = inf;
  std::vector<double> alpha(m_);

  while (true) {
    if (iter_ >= max_iter_) {
      std::ostringstream msg;
      msg << "simplex iteration limit " << max_iter_ << " reached in phase " << phase_
          << " (rows " << m_ << ", cols " << n_ << ", infeasibility " << total_infeasibility()
          << ")";
      throw LpError(msg.str());
    }
    if (etas_.size() >= opt_.refactor_interval) {
      if (!factorize()) {
        restore_checkpoint();
        if (!factorize()) throw LpError("basis refactorization failed");
        log_.push_back("singular basis at iteration " + std::to_string(iter_) +
                       "; restored last factorized basis");
      }
      checkpoint();
      recompute_basics();
      duals_fresh = false;
    }

    if (phase_ == 1 && total_infeasibility() == 0.0) {
      phase_ = 2;
      std::fill(weight_.begin(), weight_.end(), 1.0);
      duals_fresh = false;
      bland_ = false;
      degenerate_run_ = 0;
      last_objective = inf;
    } else if (phase_ == 2 && total_infeasibility() > 0.0) {
      phase_ = 1;  // numerical drift after refactorization
      duals_fresh = false;
      log_.push_back("primal infeasibility reappeared at iteration " + std::to_string(iter_));
    }
    if (phase_ == 1 || !duals_fresh) compute_duals();
    duals_fresh = true;

    long entering = choose_entering();
    if (entering < 0) {
      // Confirm with a fresh factorization before declaring termination.
      if (!etas_.empty()) {
        if (!factorize()) {
          restore_checkpoint();
          if (!factorize()) throw LpError("basis refactorization failed");
        }
        checkpoint();
        recompute_basics();
        duals_fresh = false;
        continue;
      }
      if (phase_ == 1) {
        const double infeas = total_infeasibility();
        if (infeas > 0.0) {
          std::size_t count = 0, worst = 0;
          double worst_v = 0.0;
          for (std::size_t i = 0; i < m_; ++i) {
            const auto j = static_cast<std::size_t>(head_[i]);
            const double v = infeasibility(j);
            if (v > 0.0) ++count;
            if (v > worst_v) {
              worst_v = v;
              worst = j;
            }
          }
          std::ostringstream msg;
          msg << "phase 1 ended at iteration " << iter_ << " with infeasibility " << infeas << " in " << count
              << " basic variables (largest " << worst_v << " on " << (worst < n_ ? "column " : "row ")
              << (worst < n_ ? worst : worst - n_) << ")";
          log_.push_back(msg.str());
          return Status::infeasible;
        }
        return Status::optimal;
      }
      if (total_infeasibility() > 0.0) {
        phase_ = 1;
        continue;
      }
      return Status::optimal;
    }
    const auto q = static_cast<std::size_t>(entering);
    const double dir = d_[q] < 0.0 ? 1.0 : -1.0;

    scatter_column(q, alpha);
    ftran(alpha);

    // Harris ratio test. Pass 1: largest step with bounds relaxed by the
    // primal tolerance; pass 2: largest pivot among rows within that step.
    double theta_max = inf;
    for (std::size_t i = 0; i < m_; ++i) {
      const double a = alpha[i];
      if (std::abs(a) < opt_.pivot_tolerance) continue;
      const auto j = static_cast<std::size_t>(head_[i]);
      const double rate = -dir * a;
      const double v = x_[j];
      double lim = inf;
      if (phase_ == 1 && v < s_.lo[j] - lo_tol_[j]) {
        if (rate > 0.0) lim = (s_.lo[j] - v) / rate;
      } else if (phase_ == 1 && v > s_.hi[j] + hi_tol_[j]) {
        if (rate < 0.0) lim = (v - s_.hi[j]) / -rate;
      } else if (rate < 0.0) {
        if (std::isfinite(s_.lo[j])) lim = (v - s_.lo[j] + lo_tol_[j]) / -rate;
      } else {
        if (std::isfinite(s_.hi[j])) lim = (s_.hi[j] - v + hi_tol_[j]) / rate;
      }
      theta_max = std::min(theta_max, lim);
    }

    long leave = -1;
    double theta = inf;
    bool leave_at_upper = false;
    {
      double best_pivot = 0.0;
      for (std::size_t i = 0; i < m_; ++i) {
        const double a = alpha[i];
        if (std::abs(a) < opt_.pivot_tolerance) continue;
        const auto j = static_cast<std::size_t>(head_[i]);
        const double rate = -dir * a;
        const double v = x_[j];
        double ratio = inf;
        bool upper = false;
        if (phase_ == 1 && v < s_.lo[j] - lo_tol_[j]) {
          if (rate > 0.0) ratio = (s_.lo[j] - v) / rate;
        } else if (phase_ == 1 && v > s_.hi[j] + hi_tol_[j]) {
          if (rate < 0.0) {
            ratio = (v - s_.hi[j]) / -rate;
            upper = true;
          }
        } else if (rate < 0.0) {
          if (std::isfinite(s_.lo[j])) ratio = (v - s_.lo[j]) / -rate;
        } else {
          if (std::isfinite(s_.hi[j])) {
            ratio = (s_.hi[j] - v) / rate;
            upper = true;
          }
        }
        if (!std::isfinite(ratio)) continue;
        ratio = std::max(ratio, 0.0);
        if (bland_) {
          // Minimum ratio, ties broken by smallest variable index.
          const bool better =
              leave < 0 || ratio < theta - 1e-12 ||
              (ratio <= theta + 1e-12 && j < static_cast<std::size_t>(head_[static_cast<std::size_t>(leave)]));
          if (better) {
            leave = static_cast<long>(i);
            theta = ratio;
            leave_at_upper = upper;
          }
        } else if (ratio <= theta_max && std::abs(a) > best_pivot) {
          best_pivot = std::abs(a);
          leave = static_cast<long>(i);
          theta = ratio;
          leave_at_upper = upper;
        }
      }
    }

    const double range = s_.hi[q] - s_.lo[q];
    const bool flip = std::isfinite(range) && range <= theta;
    if (leave < 0 && !flip) {
      if (phase_ == 2) return Status::unbounded;
      // Cannot happen for a consistent phase-1 direction; refactor and retry.
      d_[q] = 0.0;
      if (!factorize()) throw LpError("basis refactorization failed");
      checkpoint();
      recompute_basics();
      duals_fresh = false;
      ++iter_;
      continue;
    }

    const double step = flip ? range : theta;
    const double objective_change = std::abs(d_[q]) * step;

    ++iter_;
    if (phase_ == 1) ++phase1_iter_;
    if (objective_change <= 1e-12) {
      if (++degenerate_run_ > opt_.degenerate_limit && !bland_) {
        bland_ = true;
        log_.push_back("stalling detected at iteration " + std::to_string(iter_) +
                       "; switching to Bland's rule");
      }
    } else {
      degenerate_run_ = 0;
      bland_ = opt_.force_bland;
    }
    if (opt_.force_bland) bland_ = true;

    if (step != 0.0) {
      for (std::size_t i = 0; i < m_; ++i)
        if (alpha[i] != 0.0) x_[static_cast<std::size_t>(head_[i])] -= dir * step * alpha[i];
      x_[q] += dir * step;
    }

    if (flip) {
      status_[q] = dir > 0.0 ? VarStatus::at_upper : VarStatus::at_lower;
      x_[q] = dir > 0.0 ? s_.hi[q] : s_.lo[q];
      if (phase_ == 2) {
        // Reduced costs are unchanged by a bound flip.
        duals_fresh = true;
      }
      continue;
    }

    const auto p = static_cast<std::size_t>(leave);
    const auto leaving = static_cast<std::size_t>(head_[p]);
    const double alpha_p = alpha[p];

    // Pivot row for Devex weights and the reduced-cost update.
    compute_pivot_row(p);
    const double dq = d_[q];
    const double wq = weight_[q];
    for (auto j : row_touched_) {
      if (status_[j] == VarStatus::basic || j == q) continue;
      const double ratio = row_alpha_[j] / alpha_p;
      d_[j] -= dq * ratio;
      weight_[j] = std::max(weight_[j], ratio * ratio * wq);
    }

    // Leaving variable becomes nonbasic at the bound it reached.
    if (s_.lo[leaving] == s_.hi[leaving]) {
      status_[leaving] = VarStatus::fixed;
      x_[leaving] = s_.lo[leaving];
    } else if (leave_at_upper) {
      status_[leaving] = VarStatus::at_upper;
      x_[leaving] = s_.hi[leaving];
    } else {
      status_[leaving] = VarStatus::at_lower;
      x_[leaving] = s_.lo[leaving];
    }
    pos_[leaving] = -1;
    d_[leaving] = -dq / alpha_p;
    weight_[leaving] = std::max(wq / (alpha_p * alpha_p), 1.0);

    head_[p] = static_cast<int>(q);
    pos_[q] = static_cast<int>(p);
    status_[q] = VarStatus::basic;
    d_[q] = 0.0;

    Eta eta;
    eta.pivot = p;
    eta.pivot_value = alpha_p;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == p || std::abs(alpha[i]) < 1e-14) continue;
      eta.index.push_back(static_cast<int>(i));
      eta.value.push_back(alpha[i]);
    }
    etas_.push_back(std::move(eta));

    if (weight_[q] > 1e8) std::fill(weight_.begin(), weight_.end(), 1.0);
    duals_fresh = phase_ == 2;

    if (opt_.log_every && iter_ % opt_.log_every == 0) {
      double obj = 0.0;
      for (std::size_t j = 0; j < n_; ++j) obj += s_.cost[j] * x_[j];
      std::ostringstream msg;
      msg << "iter " << iter_ << " phase " << phase_ << " infeas " << total_infeasibility()
          << " obj " << obj * s_.obj_scale << (bland_ ? " bland" : "");
      log_.push_back(msg.str());
    }
    (void)last_objective;
  }
}

Solution solve_without_rows(const StandardFormLp& p) {
  Solution sol;
  sol.x.assign(p.num_cols(), 0.0);
  sol.reduced_costs = p.cost;
  for (std::size_t j = 0; j < p.num_cols(); ++j) {
    const double c = p.cost[j];
    const double bound = c > 0.0 ? p.lower[j] : c < 0.0 ? p.upper[j] : 0.0;
    if (!std::isfinite(bound)) {
      if (c != 0.0) {
        sol.status = Status::unbounded;
        sol.x.clear();
        sol.reduced_costs.clear();
        return sol;
      }
    }
    double v = c == 0.0 ? std::clamp(0.0, p.lower[j], p.upper[j]) : bound;
    sol.x[j] = v;
    sol.objective += c * v;
  }
  sol.status = Status::optimal;
  return sol;
}

}  // namespace

Solution simplex_solve(const StandardFormLp& problem, const SimplexOptions& options) {
  problem.validate();
  for (std::size_t j = 0; j < problem.num_cols(); ++j) {
    if (problem.lower[j] > problem.upper[j]) {
      Solution s;
      s.status = Status::infeasible;
      return s;
    }
  }
  for (const auto& r : problem.rows) {
    if (r.lower() > r.upper()) {
      Solution s;
      s.status = Status::infeasible;
      return s;
    }
  }
  if (problem.num_rows() == 0) return solve_without_rows(problem);

  const Scaled scaled = build_scaled(problem, options.scale);
  Simplex simplex(scaled, options);
  Solution sol;
  sol.status = simplex.run();
  sol.iterations = simplex.iterations();
  sol.phase_one_iterations = simplex.phase_one_iterations();
  sol.log = std::move(simplex.log());
  if (sol.status != Status::optimal) return sol;

  const std::size_t n = problem.num_cols(), m = problem.num_rows();
  const auto& xs = simplex.values();
  sol.x.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    double v = xs[j] * scaled.col_scale[j];
    v = std::clamp(v, problem.lower[j], problem.upper[j]);
    sol.x[j] = v;
  }
  sol.row_duals.resize(m);
  const auto& ys = simplex.duals();
  for (std::size_t r = 0; r < m; ++r) sol.row_duals[r] = ys[r] * scaled.row_scale[r] * scaled.obj_scale;

  sol.objective = 0.0;
  for (std::size_t j = 0; j < n; ++j) sol.objective += problem.cost[j] * sol.x[j];
  sol.reduced_costs = problem.cost;
  for (const auto& e : problem.entries) sol.reduced_costs[e.col] -= sol.row_duals[e.row] * e.value;

  const auto act = problem.row_activity(sol.x);
  double res = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    res = std::max(res, problem.rows[r].lower() - act[r]);
    res = std::max(res, act[r] - problem.rows[r].upper());
  }
  sol.max_primal_residual = res;
  double dinf = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double dj = sol.reduced_costs[j];
    const bool can_rise = sol.x[j] < problem.upper[j] - 1e-9 * (1.0 + std::abs(problem.upper[j]));
    const bool can_fall = sol.x[j] > problem.lower[j] + 1e-9 * (1.0 + std::abs(problem.lower[j]));
    if (can_rise && dj < 0.0) dinf = std::max(dinf, -dj);
    if (can_fall && dj > 0.0) dinf = std::max(dinf, dj);
  }
  sol.max_dual_infeasibility = dinf;
  return sol;
}

}  // namespace carshare::lp
