#pragma once

#include <cstddef>
#include <filesystem>

#include "scr/nn.hpp"

namespace scr {

// A trained encoder plus the hop count its inputs were built with.
struct Snapshot {
  MlpModel model;
  std::size_t hops = 0;
};

// Writes <dir>/model.bin (one matrix container per tensor: weight, then bias as
// a 1 x fan_out row, layer by layer) and <dir>/model.manifest (plain text).
void save_snapshot(const std::filesystem::path& dir, const Snapshot& snapshot);
Snapshot load_snapshot(const std::filesystem::path& dir);

}  // namespace scr
