#pragma once

#include "qtree/config.hpp"
#include "qtree/trace.hpp"

namespace qtree::sim {

// Runs one simulation to completion. The config must already be finalized.
Trace run_protocol(const SimConfig& cfg);

}  // namespace qtree::sim
