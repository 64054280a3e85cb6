#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "biag/banks.hpp"
#include "biag/harness/protocol.hpp"
#include "biag/nc/geometry.hpp"
#include "biag/num/rng.hpp"

namespace biag::harness {

enum class Geometry { kEtf, kRandomDirections };
/// Rotation inside the hidden prototype→weight link. Only the identity keeps
/// the truth weights aligned with their own class means.
enum class LinkRotation { kIdentity, kRandom };

std::string_view to_string(Geometry g);
std::string_view to_string(LinkRotation r);
Geometry parse_geometry(std::string_view s);
LinkRotation parse_link_rotation(std::string_view s);

struct SynthConfig {
  std::size_t dim = 64;
  double noise_sigma = 0.05;
  Geometry geometry = Geometry::kRandomDirections;
  bool affine_link = true;
  std::size_t n_train = 20;
  std::size_t n_test = 20;
  /// Norm of every class mean.
  double mean_norm = 4.0;
  /// Random directions are drawn inside a random subspace of this rank;
  /// 0 means the full space.
  std::size_t subspace_rank = 6;
  /// Subtract the global mean from random-direction class means so they are
  /// centered like a collapsed configuration. ETF means are centered anyway.
  bool center_means = true;
  /// 0 draws s uniformly from [0.5, 2].
  double link_scale = 0.0;
  LinkRotation link_rotation = LinkRotation::kIdentity;

  /// Throws ConfigError naming the offending field.
  void validate(std::size_t total_classes) const;
};

struct SynthBank {
  FeatureBank bank;
  num::Matrix class_means;         ///< aligned to bank.classes
  std::optional<nc::AffineMap> truth;

  /// Hidden-truth weight rows for `ids`. Throws ConfigError without a link.
  num::Matrix true_weights(std::span<const ClassId> ids) const;
};

/// Class ids are 0..total−1. Samples are mean + N(0, σ²I).
SynthBank synth_bank(const SessionProtocol& protocol, const SynthConfig& config, num::Rng& rng);

}  // namespace biag::harness
