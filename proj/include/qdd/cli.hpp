#pragma once

namespace qdd {

// Entry point behind the qdd binary. Exit codes: 0 success / all checks pass,
// 1 failed experiment assertions, 2 usage or input errors.
int cli_main(int argc, char** argv);

}  // namespace qdd
