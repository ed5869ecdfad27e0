#pragma once

#include "beamxfer/mlp.hpp"

#include <filesystem>
#include <string>

namespace beamxfer {

struct Checkpoint {
    MlpModel model;
    Area normalizer_area;
    TrainConfig config;
    TrainHistory history;
};

// Binary layout: the 8-byte magic "BXMLPCK1", a little-endian u64 header
// length, a JSON header (layer dims, normaliser, config, history, array
// shapes), then every weight matrix and bias vector as row-major
// little-endian float64 in layer order. Loading reproduces the saved doubles
// bit for bit.
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string checkpoint_to_bytes(const Checkpoint& checkpoint);
Checkpoint checkpoint_from_bytes(const std::string& bytes);

}  // namespace beamxfer
