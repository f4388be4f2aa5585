#pragma once

#include <iosfwd>

namespace spinsim::cli {

/// Entry point of the `spinsim` executable. Returns 0 on success, 2 on a
/// usage or configuration error, 1 on a runtime failure.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace spinsim::cli
