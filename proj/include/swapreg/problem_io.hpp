#pragma once

#include <filesystem>
#include <iosfwd>

#include "swapreg/treeform.hpp"

namespace swapreg::treeform {

/// Plain-text problem description format.
///
///   # comment (blank lines are also fine)
///   node <id> decision <child-id> [<child-id> ...]
///   node <id> observation <child-id> [<child-id> ...]
///   node <id> terminal <z>
///   root <id>
///
/// Node ids must be exactly 0..N-1, each defined once, in any order. The
/// `root` line is optional and defaults to 0. Terminal indices <z> are
/// 1-based in files (matching every other external artifact of the tool)
/// and 1 <= z <= number of terminals.
///
/// Alternatively a file may consist of a single generator line
///
///   fig1 d=<d> n=<n>
///
/// which emits the built-in two-level (d, n) family; see
/// TreeFormProblem::two_level for its layout. A generator line cannot be
/// mixed with node lines.
///
/// Parse or structural failures throw ValidationError with the line number.
TreeFormProblem parse_problem(std::istream& in);
TreeFormProblem load_problem(const std::filesystem::path& path);

/// Canonical emission of the same grammar: node lines in id order, then the
/// root line. parse_problem(write_problem(p)) reproduces p exactly.
void write_problem(std::ostream& out, const TreeFormProblem& problem);
void save_problem(const std::filesystem::path& path,
                  const TreeFormProblem& problem);

}  // namespace swapreg::treeform
