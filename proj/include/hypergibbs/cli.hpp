#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hypergibbs {

/// Runs the command line tool on args (program name excluded). Returns 0 on pass or
/// report, 1 on a failing verdict, 2 on usage or input errors.
int cli_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hypergibbs
