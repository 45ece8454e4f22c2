#ifndef DV_CLI_HPP_
#define DV_CLI_HPP_

#include <iosfwd>
#include <string>
#include <vector>

namespace dv {

// Parses and runs one subcommand. Returns the process exit code:
// 0 ok, 2 config error, 3 missing dependency, 4 numeric failure, 1 other.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dv

#endif  // DV_CLI_HPP_
