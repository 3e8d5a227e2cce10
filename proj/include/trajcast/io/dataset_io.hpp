#pragma once

#include <string>

#include "trajcast/core/types.hpp"

namespace trajcast::io {

// Line-delimited text dataset, one state record per line:
//
//   #trajcast-dataset v1 dt=<dt> runconfig=<hex>
//   # scene t agent type x y vx vy heading label
//   0 0 0 robot 0 1.75 10 0 0 A_first
//
// '-' marks an absent heading or label. Records are sorted by
// (scene, t, agent); each agent's timesteps are contiguous over its
// presence interval. Floats are written with %.17g so a round-trip
// through the loader is lossless. The loader rejects malformed lines
// with line-numbered diagnostics and never skips silently.
std::string dataset_to_string(const Dataset& ds, const std::string& runconfig_hash);
Dataset dataset_from_string(const std::string& text);

void save_dataset(const Dataset& ds, const std::string& path, const std::string& runconfig_hash);
Dataset load_dataset(const std::string& path);

}  // namespace trajcast::io
