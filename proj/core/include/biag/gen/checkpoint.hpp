#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "biag/gen/params.hpp"

namespace biag::gen {

/// Generator checkpoint container, little-endian:
///
///   "BIAG" | u16 version | u32 D | u32 n_layers | u8 scm_mode
///   | u8 scm_kind | u8 activation
///   then until EOF, per tensor in BiagParams::tensors() order:
///   u32 name_len | name | u32 rows | u32 cols | rows·cols f64
inline constexpr std::uint16_t kCheckpointVersion = 1;

std::vector<char> encode_checkpoint(const BiagParams& params);
/// Throws FormatError (with byte offset) on bad magic, version, truncation,
/// or tensor names/shapes that do not match the header.
BiagParams decode_checkpoint(std::span<const char> bytes);

void save_checkpoint(const BiagParams& params, const std::filesystem::path& path);
BiagParams load_checkpoint(const std::filesystem::path& path);

}  // namespace biag::gen
