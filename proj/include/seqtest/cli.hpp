#pragma once

namespace seqtest {

// Full command surface behind the seqtest binary.  Returns the process exit
// code: 0 all checks passed, 1 bound-check failure or invalid trials,
// 2 configuration or usage error.
int run_cli(int argc, const char* const* argv);

}  // namespace seqtest
