// Parameter checkpoints: versioned, self-describing segment table followed
// by a little-endian float64 payload.

#pragma once

#include <filesystem>

#include "abrlab/diff.hpp"

namespace abrlab {

void save_checkpoint(const ParamSet& params, const std::filesystem::path& path);

// Rebuilds the layout from the embedded segment table.
ParamSet load_checkpoint(const std::filesystem::path& path);

}  // namespace abrlab
