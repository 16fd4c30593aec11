#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace msm {

// Entry point of the msm_mediate command line; args excludes the program name.
// Returns the process exit code: 0 success, 1 usage error, 2 runtime failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace msm
