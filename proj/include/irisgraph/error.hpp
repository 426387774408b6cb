#pragma once

#include <stdexcept>
#include <string>

namespace irisgraph {

// Malformed or unsupported on-disk data: PNM headers, archive magic, truncation.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid configuration value: unsupported alpha, bad split ratios, ...
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input that violates a pipeline precondition: empty mask, node-cap overflow, ...
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Training aborted (divergence, empty pair sets).
struct TrainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace irisgraph
