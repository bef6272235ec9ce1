#pragma once

#include <ostream>

namespace spic {

/// Entry point of the `spic` command. Returns 0 on success, 1 on runtime
/// errors and 2 on usage errors.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace spic
