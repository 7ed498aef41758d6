#pragma once

#include <iosfwd>

// command-line surface: materials / match / sweep / sar / touchstone
// subcommands over the library pipeline.
//
// exit codes: 0 success, 2 usage, 3 input parse failure, 4 no physical
// answer (k < 1, extrapolation, invalid operating point), 5 file i/o.
namespace bcplink::cli {

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace bcplink::cli
