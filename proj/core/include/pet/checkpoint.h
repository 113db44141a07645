// pet/checkpoint.h
//
// Self-describing model container:
//
//   bytes 0..7   magic "PETCKPT" followed by format version byte 0x01
//   bytes 8..15  header length N, little-endian uint64
//   next N bytes UTF-8 JSON header (dims, feature config, vocabulary, per-token
//                feature values, tensor names and shapes, metadata)
//   remainder    every tensor as row-major little-endian float64, in header
//                order
//
// Serialization is deterministic: load followed by save reproduces the input
// bytes exactly.

#pragma once

#include <map>
#include <string>
#include <string_view>

#include "pet/transducer.h"

namespace pet {

using CheckpointMetadata = std::map<std::string, std::string>;

std::string SerializeCheckpoint(const ModelParams &params,
                                const CheckpointMetadata &metadata = {});
// Throws ParseError on malformed input.
ModelParams DeserializeCheckpoint(std::string_view bytes,
                                  CheckpointMetadata *metadata = nullptr);

void SaveCheckpoint(const std::string &path, const ModelParams &params,
                    const CheckpointMetadata &metadata = {});
ModelParams LoadCheckpoint(const std::string &path,
                           CheckpointMetadata *metadata = nullptr);

}  // namespace pet
