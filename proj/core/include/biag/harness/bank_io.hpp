#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "biag/banks.hpp"
#include "biag/nc/geometry.hpp"

namespace biag::harness {

/// Feature bank file, little-endian:
///
///   "FVB1" | u16 version | u32 D | u32 class count
///   then per class: u32 id | u32 n_train | u32 n_test | f64 train rows | f64 test rows
inline constexpr std::uint16_t kBankVersion = 1;

std::vector<char> encode_bank(const FeatureBank& bank);
/// Throws FormatError (with offset) on malformed input and the bank's
/// validation error on duplicate ids or bad values.
FeatureBank decode_bank(std::span<const char> bytes);
void write_bank(const FeatureBank& bank, const std::filesystem::path& path);
/// Sets provenance to the import path.
FeatureBank read_bank(const std::filesystem::path& path);

/// Hidden affine link file: "AFM1" | u16 version | A matrix | b matrix.
std::vector<char> encode_affine(const nc::AffineMap& map);
nc::AffineMap decode_affine(std::span<const char> bytes);
void write_affine(const nc::AffineMap& map, const std::filesystem::path& path);
nc::AffineMap read_affine(const std::filesystem::path& path);

/// Weight bank file: "WTB1" | u16 version | u32 count | u32 ids | i32 sessions | matrix.
std::vector<char> encode_weights(const WeightBank& weights);
WeightBank decode_weights(std::span<const char> bytes);
void write_weights(const WeightBank& weights, const std::filesystem::path& path);
WeightBank read_weights(const std::filesystem::path& path);

}  // namespace biag::harness
