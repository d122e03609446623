#pragma once

#include <iosfwd>

namespace storygraph {

/// Entry point of the storygraph command line. Returns the process exit code:
/// 0 success, 2 usage error or missing dataset directory, 3 missing file,
/// 4 malformed input, 5 numerical failure, 6 I/O failure, 1 anything else.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace storygraph
