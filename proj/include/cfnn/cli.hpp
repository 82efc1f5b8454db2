#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cfnn {

// Subcommands: canonicalize, train, experiment, eval, gen-data. Returns the
// process exit code; diagnostics go to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int dispatch(int argc, char** argv);

}  // namespace cfnn
