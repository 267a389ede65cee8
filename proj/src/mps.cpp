#include "carshare/mps.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "carshare/error.hpp"
#include "carshare/io.hpp"

namespace carshare::lp {
namespace {

constexpr const char* objective_row = "COST";
constexpr std::size_t name_width = 8;
constexpr std::size_t number_width = 12;

std::string indexed_name(char prefix, std::size_t i) {
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%c%07zu", prefix, i + 1);
  return buf.data();
}

// Shortest %g rendering that round-trips, else the most precise one that
// fits the 12-character numeric field.
std::string mps_number(double v) {
  std::string best;
  for (int prec = 17; prec >= 1; --prec) {
    std::array<char, 40> buf{};
    std::snprintf(buf.data(), buf.size(), "%.*g", prec, v);
    std::string s(buf.data());
    if (s.size() > number_width) continue;
    if (best.empty()) best = s;
    // Prefer the shortest text with the same value as the best fit.
    if (s.size() <= best.size() && std::strtod(s.c_str(), nullptr) == std::strtod(best.c_str(), nullptr))
      best = s;
  }
  if (best.empty()) throw UserError("value " + io::format_double(v) + " does not fit an MPS field");
  return best;
}

void pad_to(std::string& line, std::size_t column) {
  if (line.size() < column - 1) line.append(column - 1 - line.size(), ' ');
}

// Fields start at columns 2, 5, 15, 25, 40, 50 (1-based).
std::string record(std::string_view f1, std::string_view f2, std::string_view f3 = {},
                   std::string_view f4 = {}) {
  std::string line;
  pad_to(line, 2);
  line += f1;
  pad_to(line, 5);
  line += f2;
  if (!f3.empty()) {
    pad_to(line, 15);
    line += f3;
    pad_to(line, 25);
    line += f4;
  }
  return line;
}

void check_names(const std::vector<std::string>& names, const char* kind) {
  std::unordered_set<std::string> seen;
  for (const auto& n : names) {
    if (n.empty() || n.size() > name_width)
      throw UserError(std::string("MPS ") + kind + " name '" + n +
                      "' does not fit the 8-character fixed-format field");
    if (n.find_first_of(" \t") != std::string::npos)
      throw UserError(std::string("MPS ") + kind + " name '" + n + "' contains blanks");
    if (!seen.insert(n).second)
      throw UserError(std::string("MPS ") + kind + " name collision on '" + n + "'");
  }
}

}  // namespace

std::vector<std::string> mps_column_names(const StandardFormLp& lp, MpsNames mode) {
  if (mode == MpsNames::original) return lp.col_names;
  std::vector<std::string> out(lp.num_cols());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = indexed_name('C', j);
  return out;
}

std::vector<std::string> mps_row_names(const StandardFormLp& lp, MpsNames mode) {
  std::vector<std::string> out(lp.num_rows());
  for (std::size_t r = 0; r < out.size(); ++r)
    out[r] = mode == MpsNames::original ? lp.rows[r].name : indexed_name('R', r);
  return out;
}

void export_mps(const StandardFormLp& lp, std::ostream& out, MpsNames mode) {
  lp.validate();
  const auto cols = mps_column_names(lp, mode);
  const auto rows = mps_row_names(lp, mode);
  check_names(cols, "column");
  check_names(rows, "row");
  for (const auto& r : rows)
    if (r == objective_row) throw UserError("MPS row name collision with objective row 'COST'");

  // Column-major merged coefficients.
  std::vector<std::map<std::size_t, double>> by_col(lp.num_cols());
  for (const auto& e : lp.entries) by_col[e.col][e.row] += e.value;

  std::string name = lp.name.empty() ? "LP" : lp.name;
  if (name.find_first_of(" \t") != std::string::npos) name = "LP";
  out << "NAME          " << name << '\n';
  out << "ROWS\n";
  out << record("N", objective_row) << '\n';
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const char* s = lp.rows[r].sense == RowSense::eq ? "E" : lp.rows[r].sense == RowSense::le ? "L" : "G";
    out << record(s, rows[r]) << '\n';
  }
  out << "COLUMNS\n";
  for (std::size_t j = 0; j < cols.size(); ++j) {
    bool any = false;
    if (lp.cost[j] != 0.0) {
      out << record("", cols[j], objective_row, mps_number(lp.cost[j])) << '\n';
      any = true;
    }
    for (const auto& [r, v] : by_col[j]) {
      if (v == 0.0) continue;
      out << record("", cols[j], rows[r], mps_number(v)) << '\n';
      any = true;
    }
    // Keep columns without coefficients visible to readers.
    if (!any) out << record("", cols[j], objective_row, "0") << '\n';
  }
  out << "RHS\n";
  for (std::size_t r = 0; r < rows.size(); ++r)
    if (lp.rows[r].rhs != 0.0) out << record("", "RHS", rows[r], mps_number(lp.rows[r].rhs)) << '\n';
  out << "RANGES\n";
  for (std::size_t r = 0; r < rows.size(); ++r)
    if (lp.rows[r].range != 0.0)
      out << record("", "RNG", rows[r], mps_number(lp.rows[r].range)) << '\n';
  out << "BOUNDS\n";
  for (std::size_t j = 0; j < cols.size(); ++j) {
    const double lo = lp.lower[j], hi = lp.upper[j];
    if (lo == hi) {
      out << record("FX", "BND", cols[j], mps_number(lo)) << '\n';
      continue;
    }
    if (lo == -inf && hi == inf) {
      out << record("FR", "BND", cols[j]) << '\n';
      continue;
    }
    if (lo == -inf)
      out << record("MI", "BND", cols[j]) << '\n';
    else if (lo != 0.0)
      out << record("LO", "BND", cols[j], mps_number(lo)) << '\n';
    if (hi != inf) out << record("UP", "BND", cols[j], mps_number(hi)) << '\n';
  }
  out << "ENDATA\n";
}

std::string export_mps_string(const StandardFormLp& lp, MpsNames mode) {
  std::ostringstream ss;
  export_mps(lp, ss, mode);
  return ss.str();
}

StandardFormLp import_mps(std::istream& in) {
  StandardFormLp lp;
  std::string section;
  std::string obj_name;
  std::unordered_map<std::string, std::size_t> row_idx, col_idx;
  std::string line;
  std::size_t line_no = 0;
  bool ended = false;

  auto fail = [&](const std::string& msg) -> void {
    throw UserError("MPS line " + std::to_string(line_no) + ": " + msg);
  };
  auto number = [&](const std::string& s) {
    auto v = io::parse_double(s);
    if (!v) fail("bad number '" + s + "'");
    return *v;
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '*') continue;
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;

    if (line[0] != ' ' && line[0] != '\t') {
      section = tok[0];
      if (section == "NAME") {
        if (tok.size() > 1) lp.name = tok[1];
      } else if (section == "ENDATA") {
        ended = true;
        break;
      } else if (section != "ROWS" && section != "COLUMNS" && section != "RHS" &&
                 section != "RANGES" && section != "BOUNDS") {
        fail("unknown section '" + section + "'");
      }
      continue;
    }

    if (section == "ROWS") {
      if (tok.size() != 2) fail("ROWS record needs type and name");
      const std::string& type = tok[0];
      if (type == "N") {
        if (!obj_name.empty()) fail("second objective row '" + tok[1] + "'");
        obj_name = tok[1];
        continue;
      }
      RowSense s = RowSense::eq;
      if (type == "E") s = RowSense::eq;
      else if (type == "L") s = RowSense::le;
      else if (type == "G") s = RowSense::ge;
      else fail("unknown row type '" + type + "'");
      if (!row_idx.emplace(tok[1], lp.num_rows()).second) fail("duplicate row '" + tok[1] + "'");
      lp.add_row(tok[1], s, 0.0);
    } else if (section == "COLUMNS") {
      if (tok.size() != 3 && tok.size() != 5) fail("COLUMNS record needs 3 or 5 fields");
      if (tok[1] == "'MARKER'") fail("integer markers are not supported");
      auto [it, inserted] = col_idx.emplace(tok[0], lp.num_cols());
      if (inserted) lp.add_column(tok[0], 0.0, 0.0, inf);
      const std::size_t j = it->second;
      for (std::size_t f = 1; f + 1 < tok.size(); f += 2) {
        const double v = number(tok[f + 1]);
        if (tok[f] == obj_name) {
          lp.cost[j] += v;
        } else {
          auto r = row_idx.find(tok[f]);
          if (r == row_idx.end()) fail("unknown row '" + tok[f] + "'");
          if (v != 0.0) lp.add_entry(r->second, j, v);
        }
      }
    } else if (section == "RHS" || section == "RANGES") {
      if (tok.size() != 3 && tok.size() != 5) fail(section + " record needs 3 or 5 fields");
      for (std::size_t f = 1; f + 1 < tok.size(); f += 2) {
        const double v = number(tok[f + 1]);
        if (tok[f] == obj_name) fail("objective constants are not supported");
        auto r = row_idx.find(tok[f]);
        if (r == row_idx.end()) fail("unknown row '" + tok[f] + "'");
        if (section == "RHS") lp.rows[r->second].rhs = v;
        else lp.rows[r->second].range = v;
      }
    } else if (section == "BOUNDS") {
      if (tok.size() < 3) fail("BOUNDS record needs at least 3 fields");
      const std::string& type = tok[0];
      auto c = col_idx.find(tok[2]);
      if (c == col_idx.end()) fail("unknown column '" + tok[2] + "'");
      const std::size_t j = c->second;
      const bool needs_value = type == "UP" || type == "LO" || type == "FX";
      if (needs_value && tok.size() != 4) fail(type + " bound needs a value");
      if (type == "UP") lp.upper[j] = number(tok[3]);
      else if (type == "LO") lp.lower[j] = number(tok[3]);
      else if (type == "FX") lp.lower[j] = lp.upper[j] = number(tok[3]);
      else if (type == "FR") { lp.lower[j] = -inf; lp.upper[j] = inf; }
      else if (type == "MI") lp.lower[j] = -inf;
      else if (type == "PL") lp.upper[j] = inf;
      else fail("unsupported bound type '" + type + "'");
    } else {
      fail("record outside of a section");
    }
  }
  if (!ended) throw UserError("MPS input ended without ENDATA");
  return lp;
}

Solution import_solution(std::istream& in, const StandardFormLp& lp,
                         const std::vector<std::string>& names) {
  std::unordered_map<std::string, std::size_t> idx;
  for (std::size_t j = 0; j < names.size(); ++j) idx.emplace(names[j], j);
  Solution sol;
  sol.status = Status::optimal;
  sol.x.assign(lp.num_cols(), 0.0);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (io::trim(line).empty() || line[0] == '#') continue;
    const char delim = line.find(';') != std::string::npos ? ';' : ',';
    auto f = io::split(line, delim);
    if (f.size() != 2)
      throw UserError("solution line " + std::to_string(line_no) + ": expected 'variable,value'");
    auto v = io::parse_double(f[1]);
    if (!v) {
      if (line_no == 1) continue;  // header
      throw UserError("solution line " + std::to_string(line_no) + ": bad value '" + f[1] + "'");
    }
    auto it = idx.find(f[0]);
    if (it == idx.end())
      throw UserError("solution line " + std::to_string(line_no) + ": unknown variable '" +
                      f[0] + "'");
    sol.x[it->second] = *v;
  }
  for (std::size_t j = 0; j < lp.num_cols(); ++j) sol.objective += lp.cost[j] * sol.x[j];
  const auto act = lp.row_activity(sol.x);
  for (std::size_t r = 0; r < lp.num_rows(); ++r) {
    sol.max_primal_residual = std::max(sol.max_primal_residual, lp.rows[r].lower() - act[r]);
    sol.max_primal_residual = std::max(sol.max_primal_residual, act[r] - lp.rows[r].upper());
  }
  return sol;
}

void export_solution(const Solution& sol, const std::vector<std::string>& names, std::ostream& out) {
  io::TableWriter w(out, {"variable", "value"});
  for (std::size_t j = 0; j < sol.x.size(); ++j) w.cell(names[j]).cell(sol.x[j]).end_row();
}

}  // namespace carshare::lp
