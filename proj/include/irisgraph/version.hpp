#pragma once

#define IRISGRAPH_VERSION "0.1.0"

namespace irisgraph {
inline const char* version() { return IRISGRAPH_VERSION; }
}
