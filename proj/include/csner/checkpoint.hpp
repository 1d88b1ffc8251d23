#pragma once

#include <string>
#include <string_view>

#include "csner/trainer.hpp"

namespace csner {

inline constexpr std::string_view kCheckpointMagic = "CSNER1";

/// Text header (magic, settings, one "tensor name rows cols offset" line per
/// tensor, payload size, checksum) followed by the binary payload: little-
/// endian float32 tensors and length-prefixed UTF-8 vocabularies.
std::string serialize_checkpoint(const Checkpoint& c);
Checkpoint parse_checkpoint(std::string_view bytes);

void save_checkpoint(const Checkpoint& c, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

/// Size the header declares for the payload, and the header length itself.
struct CheckpointLayout {
  std::size_t header_bytes = 0;
  std::size_t payload_bytes = 0;
  std::size_t tensor_bytes = 0;  // sum over declared tensors of rows*cols*4
  std::size_t vocab_bytes = 0;
};
CheckpointLayout checkpoint_layout(std::string_view bytes);

std::string config_to_string(const TrainingConfig& cfg);

}  // namespace csner
