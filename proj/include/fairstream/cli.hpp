#pragma once

#include <ostream>

namespace fairstream {

/// Entry point of the fairstream tool. Exit codes: 0 success, 1 invalid
/// arguments or configuration, 2 runtime failure.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fairstream
