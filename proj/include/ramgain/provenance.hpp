#pragma once

#include <cstdint>
#include <string>

#include "ramgain/version.hpp"

namespace ramgain {

/// Embedded in every output artifact (datasets, model bundles, reports).
struct Provenance {
  std::string tool_version = kVersion;
  std::string config_digest = "0000000000000000";
  std::uint64_t master_seed = 0;
};

/// FNV-1a 64-bit, hex-encoded. Stable across platforms; used as the config
/// digest so artifacts can be traced back to the exact run configuration.
std::string fnv1a64_hex(const std::string& bytes);

}  // namespace ramgain
