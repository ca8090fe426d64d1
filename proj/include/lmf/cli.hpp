#pragma once

namespace lmf {

// Exit codes: 0 success, 1 usage error, 2 gridding-rule violation,
// 3 numerical failure. Reports go to stdout as JSON; logs go to stderr.
int run_cli(int argc, char** argv);

}  // namespace lmf
