#pragma once

#include <cstddef>
#include <vector>

namespace carshare::lp {

// Sparse LU of a square simplex basis. Singletons are pivoted first, the
// remaining nucleus by Markowitz count with threshold partial pivoting on the
// column. Solves skip zero entries, so sparse right-hand sides stay cheap.
class BasisLu {
 public:
  struct Options {
    double threshold = 0.01;     // |pivot| >= threshold * max |column|
    double drop = 1e-14;         // entries below this after elimination are dropped
    double singular = 1e-11;     // no admissible pivot above this -> singular
    std::size_t search_limit = 4;
  };

  // Columns in compressed form: column k holds rows index[start[k]..start[k+1]).
  // Returns false if the matrix is numerically singular.
  bool factorize(std::size_t m, const std::vector<std::size_t>& start, const std::vector<int>& index,
                 const std::vector<double>& value, const Options& options);
  bool factorize(std::size_t m, const std::vector<std::size_t>& start, const std::vector<int>& index,
                 const std::vector<double>& value) {
    return factorize(m, start, index, value, Options{});
  }

  // B x = b: `v` enters indexed by row, leaves indexed by column.
  void solve(std::vector<double>& v) const;
  // B' y = c: `v` enters indexed by column, leaves indexed by row.
  void solve_transposed(std::vector<double>& v) const;

  std::size_t size() const { return m_; }
  std::size_t nonzeros() const;

 private:
  struct Factor {
    std::vector<std::size_t> start;
    std::vector<int> index;
    std::vector<double> value;
  };

  std::size_t m_ = 0;
  std::vector<int> prow_, pcol_;  // pivot k sits at (prow_[k], pcol_[k])
  std::vector<double> diag_;
  Factor l_;     // per pivot: rows i and multipliers l_ik
  Factor urow_;  // per pivot: columns j (later pivots) and u values
  Factor ucol_;  // per pivot: earlier pivot rows r and u values
  mutable std::vector<double> work_;
};

}  // namespace carshare::lp
