#ifndef RAMAT_CLI_HPP
#define RAMAT_CLI_HPP

#include <iosfwd>

namespace ramat {

/// Runs one `ramat` subcommand. Returns the process exit code: 0 on success,
/// 2 for config errors, 3 for data errors, 4 for numeric failures.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ramat

#endif  // RAMAT_CLI_HPP
