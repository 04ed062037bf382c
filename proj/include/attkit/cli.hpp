#pragma once

namespace attkit {

// Full command-line surface: analyze | weights | balance | generate |
// compare. Returns 0 on success, 1 on validation or usage errors, 2 when a
// solver reports infeasibility.
int cli_main(int argc, const char* const* argv);

}  // namespace attkit
