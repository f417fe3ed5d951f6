#pragma once

namespace mfl {

// Entry point behind the mfl binary. Returns 0 on success, 1 on bad usage or
// config, 2 on runtime failure.
int cli_main(int argc, char** argv);

}  // namespace mfl
