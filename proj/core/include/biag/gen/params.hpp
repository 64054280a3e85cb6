#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "biag/num/matrix.hpp"
#include "biag/num/rng.hpp"
#include "biag/num/tape.hpp"

namespace biag::gen {

/// How φ_SCM is instanced: one module everywhere, or separate
/// prototype→weight and weight→prototype modules.
enum class ScmMode : std::uint8_t { kShared = 0, kDirectional = 1 };

/// `kMlp`: linear(D→H), nonlinearity, linear(H→D). `kLinear`: one D→D affine
/// layer (the single-linear ablation).
enum class ScmKind : std::uint8_t { kMlp = 0, kLinear = 1 };

struct Linear {
  num::Matrix weight;  ///< out × in
  num::Matrix bias;    ///< 1 × out
};

struct ScmParams {
  ScmKind kind = ScmKind::kMlp;
  num::Activation activation = num::Activation::kTanh;
  std::size_t hidden = 0;
  std::vector<Linear> layers;

  std::size_t dim() const { return layers.front().weight.cols(); }

  /// Uniform(±1/√fan_in) initialisation for weights and biases.
  static ScmParams random(std::size_t dim, ScmKind kind, std::size_t hidden,
                          num::Activation activation, num::Rng& rng);
  /// Every layer set to the identity with zero bias and identity
  /// nonlinearity; the module then computes y = x exactly.
  static ScmParams identity(std::size_t dim, ScmKind kind);
  /// Single affine map x ↦ x·Aᵀ + b embedded in either kind (for the MLP the
  /// first layer carries (A, b) and the second is the identity).
  static ScmParams affine(const num::Matrix& linear, const num::Matrix& offset, ScmKind kind);
};

struct NamedTensor {
  std::string name;
  num::Matrix* value;
};

struct ConstNamedTensor {
  std::string name;
  const num::Matrix* value;
};

/// All trainable state of the stacked generator.
struct BiagParams {
  std::size_t dim = 0;
  std::size_t num_layers = 4;
  ScmMode scm_mode = ScmMode::kShared;
  ScmParams scm;                        ///< shared, or prototype→weight when directional
  std::optional<ScmParams> scm_w2p;     ///< weight→prototype, directional only
  num::Matrix decoder;                  ///< d_E, way × dim, zero at construction

  std::size_t way() const noexcept { return decoder.rows(); }

  /// Canonical tensor order used by the optimizer, checkpoints and gradcheck.
  std::vector<NamedTensor> tensors();
  std::vector<ConstNamedTensor> tensors() const;

  /// Throws ConfigError/ShapeError if any invariant is broken.
  void validate() const;

  bool operator==(const BiagParams& other) const;
};

struct BiagShape {
  std::size_t dim = 64;
  std::size_t way = 5;
  std::size_t num_layers = 4;
  ScmMode scm_mode = ScmMode::kShared;
  ScmKind scm_kind = ScmKind::kMlp;
  std::size_t hidden = 0;  ///< 0 → 2·dim
  num::Activation activation = num::Activation::kTanh;
};

BiagParams init_params(const BiagShape& shape, num::Rng& rng);

std::string_view to_string(ScmMode m);
std::string_view to_string(ScmKind k);
std::string_view to_string(num::Activation a);
ScmMode parse_scm_mode(std::string_view s);
ScmKind parse_scm_kind(std::string_view s);
num::Activation parse_activation(std::string_view s);

}  // namespace biag::gen
