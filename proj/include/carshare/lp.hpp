#pragma once

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace carshare::lp {

inline constexpr double inf = std::numeric_limits<double>::infinity();

enum class RowSense { eq, le, ge };

struct Row {
  std::string name;
  RowSense sense = RowSense::le;
  double rhs = 0.0;
  // MPS RANGES value; 0 means no range. Interpreted exactly as in MPS:
  // E rows get [rhs, rhs+|r|] for r>0 and [rhs-|r|, rhs] for r<0,
  // L rows get [rhs-|r|, rhs], G rows get [rhs, rhs+|r|].
  double range = 0.0;

  double lower() const;
  double upper() const;
};

struct Entry {
  std::size_t row;
  std::size_t col;
  double value;
};

// minimize c'x  s.t.  row_lo <= A x <= row_hi,  l <= x <= u
// Equality and <= rows of the textbook standard form are the eq / le senses.
// A is stored as sparse triplets; duplicate (row, col) pairs are summed.
class StandardFormLp {
 public:
  std::string name = "LP";
  std::vector<std::string> col_names;
  std::vector<double> cost;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<Row> rows;
  std::vector<Entry> entries;

  std::size_t num_cols() const { return cost.size(); }
  std::size_t num_rows() const { return rows.size(); }

  std::size_t add_column(std::string col_name, double c, double lo = 0.0, double hi = inf);
  std::size_t add_row(std::string row_name, RowSense sense, double rhs);
  void add_entry(std::size_t row, std::size_t col, double value);

  // Throws UserError on NaN/Inf coefficients, inconsistent sizes, empty
  // bound intervals or out-of-range triplets.
  void validate() const;
  // Throws UserError naming the first duplicate row or column name.
  void validate_names() const;

  std::unordered_map<std::string, std::size_t> column_index() const;

  // Row activities A x.
  std::vector<double> row_activity(const std::vector<double>& x) const;
};

enum class Status { optimal, infeasible, unbounded };

const char* to_string(Status s);

struct Solution {
  Status status = Status::infeasible;
  double objective = 0.0;
  std::vector<double> x;             // primal values, empty unless optimal
  std::vector<double> row_duals;     // y: d(objective)/d(row bound) at optimum
  std::vector<double> reduced_costs; // c - A'y
  std::size_t iterations = 0;
  std::size_t phase_one_iterations = 0;
  double max_primal_residual = 0.0;  // unscaled row/bound violation
  double max_dual_infeasibility = 0.0;
  std::vector<std::string> log;
};

struct SimplexOptions {
  double primal_tolerance = 1e-7;   // on the scaled problem
  double dual_tolerance = 1e-7;     // on the scaled problem
  double pivot_tolerance = 1e-9;
  std::size_t refactor_interval = 100;
  std::size_t max_iterations = 0;   // 0 = 50 * (rows + cols) + 10000
  bool scale = true;
  // Consecutive degenerate pivots tolerated before switching to Bland's rule.
  std::size_t degenerate_limit = 200;
  bool force_bland = false;
  std::size_t log_every = 0;        // 0 disables the iteration log
};

// Revised bounded primal simplex with an LU-factorized basis (periodic
// refactorization plus product-form updates in between), Devex pricing,
// a Harris ratio test and a Bland's-rule fallback on stalling.
// Throws LpError when the iteration limit is reached or the basis cannot be
// factorized.
Solution simplex_solve(const StandardFormLp& problem, const SimplexOptions& options = {});

class LpError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dual objective implied by (y, d = c - A'y) and the bounds, with the signs
// of y and d dictating which bound is active. Infinite if y/d point at an
// infinite bound. Equal to the primal objective at an optimum.
double dual_objective(const StandardFormLp& problem, const std::vector<double>& row_duals);

}  // namespace carshare::lp
