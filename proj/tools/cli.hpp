#pragma once

#include <iosfwd>

namespace stsae {

/// Entry point of the `stsae` tool. Returns 0 on success, 1 for usage errors,
/// 2 for data errors and 3 for numerical failures.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace stsae
