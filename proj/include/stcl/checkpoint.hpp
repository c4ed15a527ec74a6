#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "stcl/layers.hpp"
#include "stcl/model.hpp"

namespace stcl {

inline constexpr char kCheckpointMagic[4] = {'S', 'T', 'C', 'L'};
inline constexpr std::uint16_t kCheckpointVersion = 1;

/// Binary layout, all integers little-endian:
///   "STCL" | u16 version | u16 kind length, kind bytes
///   | u16 field count, per field: u16 key length, key, u64 value
///   | u32 array count, per array: u16 name length, name, u8 rank,
///     u32 dims[rank], f32 values[prod(dims)]
///   | u32 CRC-32 of every preceding byte
struct Checkpoint {
  std::string kind;
  std::vector<std::pair<std::string, std::uint64_t>> config;
  std::vector<NamedArray> arrays;

  std::uint64_t field(const std::string& key) const;
  /// Hash of the serialized bytes.
  std::uint64_t fingerprint() const;
};

std::vector<unsigned char> serialize_checkpoint(const Checkpoint& checkpoint);
/// Throws CheckpointError: bad_magic, unsupported_version, checksum_mismatch
/// (including truncation), or malformed.
Checkpoint parse_checkpoint(const std::vector<unsigned char>& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

Checkpoint model_checkpoint(const Model& model);
ModelConfig model_config_from(const Checkpoint& checkpoint);
/// Builds a model from the echoed configuration.
Model model_from(const Checkpoint& checkpoint);
/// Loads into an existing model; a differing architecture is config_mismatch.
void restore_model(Model& model, const Checkpoint& checkpoint);

}  // namespace stcl
