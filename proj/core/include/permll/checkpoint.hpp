#pragma once

#include <filesystem>
#include <string_view>

#include "permll/trainer.hpp"

namespace permll {

// json:   a single JSON object {"format": "permll-checkpoint", "version": 1, ...}.
// binary: the 8-byte magic "PERMLLCK", a little-endian uint32 version, then the
//         same document encoded as CBOR (doubles kept as IEEE-754 binary64).
// Both forms round-trip every double exactly.
enum class CheckpointFormat { json, binary };

CheckpointFormat parse_checkpoint_format(std::string_view name);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt,
                     CheckpointFormat format = CheckpointFormat::json);

// Detects the format from the first bytes. Throws ParseError on a bad file or
// an unsupported version.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace permll
