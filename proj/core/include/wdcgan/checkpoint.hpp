#pragma once

// Binary parameter checkpoints.
//
// Layout (all integers and floats little-endian):
//   "WDCGAN1"                      7-byte magic
//   u32 tag length, tag bytes      model kind ("generator", "critic", "classifier", ...)
//   u32 layer count, then per layer:
//     u8 kind, u64 in_channels, out_channels, kernel, stride, padding, channels,
//     f64 eps, momentum, slope, p, u8 affine
//   u64 value count, then f64 values: per layer its trainable tensors followed
//   by its buffers, in layer order.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "wdcgan/network.hpp"

namespace wdcgan::nn {

inline constexpr char kCheckpointMagic[] = "WDCGAN1";

struct Checkpoint {
  std::string kind;
  Network network;
};

std::vector<std::uint8_t> encode_checkpoint(const Network& net, const std::string& kind);
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::filesystem::path& path, const Network& net, const std::string& kind);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace wdcgan::nn
