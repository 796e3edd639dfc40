#pragma once

#include <ostream>

namespace worldkit {

// Subcommands: serve, run, export, replay. Returns the process exit status.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace worldkit
