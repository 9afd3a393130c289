#pragma once

namespace epifit {

// Exit codes: 0 success, 1 usage/schema/io error, 2 infeasible, 3 solver failure.
int run_cli(int argc, const char* const* argv);

}  // namespace epifit
