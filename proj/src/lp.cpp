#include "carshare/lp.hpp"

#include <cmath>
#include <unordered_set>

#include "carshare/error.hpp"

namespace carshare::lp {

double Row::lower() const {
  switch (sense) {
    case RowSense::eq: return range < 0.0 ? rhs + range : rhs;
    case RowSense::le: return range != 0.0 ? rhs - std::abs(range) : -inf;
    case RowSense::ge: return rhs;
  }
  return -inf;
}

double Row::upper() const {
  switch (sense) {
    case RowSense::eq: return range > 0.0 ? rhs + range : rhs;
    case RowSense::le: return rhs;
    case RowSense::ge: return range != 0.0 ? rhs + std::abs(range) : inf;
  }
  return inf;
}

const char* to_string(Status s) {
  switch (s) {
    case Status::optimal: return "optimal";
    case Status::infeasible: return "infeasible";
    case Status::unbounded: return "unbounded";
  }
  return "?";
}

std::size_t StandardFormLp::add_column(std::string col_name, double c, double lo, double hi) {
  col_names.push_back(std::move(col_name));
  cost.push_back(c);
  lower.push_back(lo);
  upper.push_back(hi);
  return cost.size() - 1;
}

std::size_t StandardFormLp::add_row(std::string row_name, RowSense sense, double rhs) {
  rows.push_back(Row{std::move(row_name), sense, rhs, 0.0});
  return rows.size() - 1;
}

void StandardFormLp::add_entry(std::size_t row, std::size_t col, double value) {
  entries.push_back(Entry{row, col, value});
}

void StandardFormLp::validate() const {
  const std::size_t n = cost.size();
  if (lower.size() != n || upper.size() != n || col_names.size() != n)
    throw UserError("LP '" + name + "': column arrays have inconsistent sizes");
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::isfinite(cost[j]))
      throw UserError("LP '" + name + "': non-finite cost on column " + col_names[j]);
    if (std::isnan(lower[j]) || std::isnan(upper[j]) || lower[j] == inf || upper[j] == -inf)
      throw UserError("LP '" + name + "': invalid bound on column " + col_names[j]);
    if (lower[j] > upper[j])
      throw UserError("LP '" + name + "': empty bound interval on column " + col_names[j]);
  }
  for (const auto& r : rows) {
    if (!std::isfinite(r.rhs) || !std::isfinite(r.range))
      throw UserError("LP '" + name + "': non-finite right-hand side on row " + r.name);
  }
  for (const auto& e : entries) {
    if (e.row >= rows.size() || e.col >= n)
      throw UserError("LP '" + name + "': coefficient index out of range");
    if (!std::isfinite(e.value))
      throw UserError("LP '" + name + "': non-finite coefficient at row " + rows[e.row].name +
                      ", column " + col_names[e.col]);
  }
}

void StandardFormLp::validate_names() const {
  std::unordered_set<std::string> seen;
  for (const auto& c : col_names)
    if (!seen.insert(c).second) throw UserError("duplicate column name '" + c + "'");
  seen.clear();
  for (const auto& r : rows)
    if (!seen.insert(r.name).second) throw UserError("duplicate row name '" + r.name + "'");
}

std::unordered_map<std::string, std::size_t> StandardFormLp::column_index() const {
  std::unordered_map<std::string, std::size_t> idx;
  idx.reserve(col_names.size());
  for (std::size_t j = 0; j < col_names.size(); ++j) idx.emplace(col_names[j], j);
  return idx;
}

std::vector<double> StandardFormLp::row_activity(const std::vector<double>& x) const {
  std::vector<double> act(rows.size(), 0.0);
  for (const auto& e : entries) act[e.row] += e.value * x[e.col];
  return act;
}

double dual_objective(const StandardFormLp& problem, const std::vector<double>& y) {
  std::vector<double> d = problem.cost;
  for (const auto& e : problem.entries) d[e.col] -= y[e.row] * e.value;
  double total = 0.0;
  // Multipliers at round-off level against an infinite bound are zero.
  auto term = [](double mult, double lo, double hi) {
    double bound = mult > 0.0 ? lo : hi;
    if (mult == 0.0 || (!std::isfinite(bound) && std::abs(mult) <= 1e-9)) return 0.0;
    return mult * bound;
  };
  for (std::size_t r = 0; r < problem.rows.size(); ++r)
    total += term(y[r], problem.rows[r].lower(), problem.rows[r].upper());
  for (std::size_t j = 0; j < d.size(); ++j)
    total += term(d[j], problem.lower[j], problem.upper[j]);
  return total;
}

}  // namespace carshare::lp
