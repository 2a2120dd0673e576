#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace covkit {

// Runs the covkit command line.  Exit codes: 0 success, 2 usage error,
// 3 window-condition check failure, 4 numeric or I/O failure.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace covkit
