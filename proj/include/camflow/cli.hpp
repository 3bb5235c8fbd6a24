#pragma once

namespace camflow {

// Entry point behind the camflow binary; exposed for in-process testing.
// Exit codes: 0 success, 1 operation/check failure, 2 usage error.
int cli_main(int argc, const char* const* argv);

}  // namespace camflow
