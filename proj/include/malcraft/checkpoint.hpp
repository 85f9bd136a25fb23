#pragma once

#include "malcraft/mlp.hpp"

#include <filesystem>

namespace malcraft {

// Versioned binary model container (magic "MCKP", little-endian). Raw IEEE
// doubles round-trip bit-exactly.
void save_model(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_model(const std::filesystem::path& path);

}  // namespace malcraft
