#pragma once

// Command line front end.
//
//   validate <model-file>
//   gen --target epl|drl <model-file> [-o <out>]
//   run <model-file> --events <stream-file> [--out <file>]
//   serve [--host <addr>] --port <N>
//
// Exit codes: 0 success, 1 validation diagnostics, 2 usage, I/O or model
// parse failure, 3 construct outside the backend's subset, 4 stream error.
// Failures go to standard error as one line each, "<code>: <message>".

#include <ostream>
#include <string>
#include <vector>

namespace cepdsl {

enum ExitCode : int {
    kExitOk = 0,
    kExitDiagnostics = 1,
    kExitInput = 2,
    kExitUnsupported = 3,
    kExitStream = 4,
};

/// `args` excludes the program name.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cepdsl
