#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "elastica/config.hpp"

namespace elastica::cli {

// Layers the configuration: defaults < file < ELASTICA_SEED < --set overrides.
Config resolve_config(const std::string& path, const std::vector<std::string>& overrides, const char* env_seed);

// "# elastica <version> config=<hash>" followed by a newline.
std::string provenance_line(const Config& config);

// Runs one subcommand. Errors are reported on `err` as a single line
//   error kind=<kind> code=<exit code> message="<text>"
// and the matching exit code is returned.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace elastica::cli
