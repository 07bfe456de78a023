#pragma once

#include <string>

#include "misgan/trainer.hpp"

namespace misgan {

constexpr int kCheckpointVersion = 1;

/// Checkpoints are JSON with parameter arrays stored as base64 of their raw
/// little-endian 64-bit floats, so save -> load -> save is byte-identical.
void save_checkpoint(const std::string& path, const TrainerState& state);
TrainerState load_checkpoint(const std::string& path);

std::string encode_base64(const std::vector<double>& values);
std::vector<double> decode_base64(const std::string& text);

}  // namespace misgan
