#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace protoagent {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,  // invalid protocol, failed or rejected proposal
  kExitInput = 2,    // bad arguments, unreadable files, bad config
  kExitBind = 3,     // serve could not bind its port
  kExitBackend = 4,  // language model backend failure
};

/// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace protoagent
