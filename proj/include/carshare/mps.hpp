#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "carshare/lp.hpp"

namespace carshare::lp {

enum class MpsNames {
  original,  // LP names as-is; each must fit the 8-character fixed-format field
  indexed,   // generated R0000001 / C0000001 codes (any LP can be exported)
};

// Names as they appear in the MPS file for the given mode.
std::vector<std::string> mps_column_names(const StandardFormLp& lp, MpsNames mode);
std::vector<std::string> mps_row_names(const StandardFormLp& lp, MpsNames mode);

// Fixed-format MPS with the sections NAME, ROWS, COLUMNS, RHS, RANGES,
// BOUNDS, ENDATA (all seven always present). The objective row is "COST".
// Throws UserError on over-long names, names containing blanks, and name
// collisions (including with the objective row).
void export_mps(const StandardFormLp& lp, std::ostream& out, MpsNames mode = MpsNames::original);
std::string export_mps_string(const StandardFormLp& lp, MpsNames mode = MpsNames::original);

// Reads the subset written by export_mps (fields are whitespace separated,
// so free-format files with blank-free names are accepted too). Throws
// UserError naming the line on unknown sections or malformed records.
StandardFormLp import_mps(std::istream& in);

// Reads an external solver result: delimited "variable,value" rows with an
// optional header. `names` are the column names used in the file (see
// mps_column_names). Unknown names are an error; missing columns are zero.
Solution import_solution(std::istream& in, const StandardFormLp& lp,
                         const std::vector<std::string>& names);

// Writes x in the same "variable,value" layout.
void export_solution(const Solution& sol, const std::vector<std::string>& names, std::ostream& out);

}  // namespace carshare::lp
