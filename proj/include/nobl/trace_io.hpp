#pragma once

#include <string>

#include "nobl/signal.hpp"

namespace nobl {

// Trace container: magic `NOBL`, u16 version=1, u16 kind=1, f64 t0, f64 dt,
// u64 n, then n little-endian f32 samples. Stimulus metadata lives in the
// dataset container, not here.
void save_trace(const Trace& trace, const std::string& path);
Trace load_trace(const std::string& path);

} // namespace nobl
