// Command-line front end.
//
//   isohom <homogenize|coercivity|decompose|laminate|ellipticity>
//          [--config <file.json>] [--strict] [--out <report.json>] [--<key> <value> ...]
//
// Overrides address config entries by dotted path (--solver.tol 1e-10) and
// take precedence over the file. Values are parsed as JSON when possible and
// as plain strings otherwise.
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace isohom::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,          // bad arguments or config, or an admissibility failure under --strict
  kIndefinite = 2,     // the cell problem lost positive curvature
  kNotConverged = 3,   // an iterative solver ran out of iterations
  kLaminateIllPosed = 4,
};

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace isohom::cli
