#pragma once

namespace exemplar::cli {

enum ExitCode : int { ok = 0, usage = 1, data_error = 2, numerical_failure = 3 };

/// Entry point of the `exemplar` tool.
int run(int argc, char** argv);

}  // namespace exemplar::cli
