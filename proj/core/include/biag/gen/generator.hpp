#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "biag/gen/params.hpp"
#include "biag/num/matrix.hpp"
#include "biag/num/tape.hpp"

namespace biag::gen {

/// Attention temperature. `kSqrtD` divides every score by √D, including the
/// 2D-wide analogical attention; `kSqrtWidth` uses √(key width).
enum class ScaleMode { kSqrtD, kSqrtWidth };

/// Ablation variants of the layer recurrence.
///  - kFull: self-attention, analogical attention and the query update.
///  - kNoWsa: the converted query q_W is used directly as W_s.
///  - kWpaaOnly: kNoWsa and the learnable query is never updated between
///    layers.
enum class Variant { kFull, kNoWsa, kWpaaOnly };

struct GeneratorOptions {
  ScaleMode scale_mode = ScaleMode::kSqrtD;
  Variant variant = Variant::kFull;
};

std::string_view to_string(ScaleMode m);
std::string_view to_string(Variant v);
ScaleMode parse_scale_mode(std::string_view s);
Variant parse_variant(std::string_view s);

/// Tape handles for one SCM instance.
struct ScmVars {
  ScmKind kind = ScmKind::kMlp;
  num::Activation activation = num::Activation::kTanh;
  std::vector<std::pair<num::Var, num::Var>> layers;  // (weight, bias)
};

/// Generator parameters bound to tape leaves.
struct BiagVars {
  std::size_t num_layers = 0;
  ScmMode scm_mode = ScmMode::kShared;
  ScmVars p2w;  ///< the shared module in shared mode
  ScmVars w2p;  ///< same leaves as p2w in shared mode
  num::Var decoder;
  std::vector<num::Var> leaves;  ///< in BiagParams::tensors() order
};

/// Records one leaf per tensor of `params`.
BiagVars bind(num::Tape& tape, const BiagParams& params);
/// Rebinds the structure of `params` onto caller-provided leaves (same order
/// as BiagParams::tensors()).
BiagVars bind(const BiagParams& params, std::span<const num::Var> leaves);

num::Var scm_forward(const ScmVars& scm, num::Var x);
/// Q = K = q_W + carrier, V = carrier.
num::Var wsa_forward(num::Var q_w, num::Var carrier, double scale);
/// Query [w_s | q_P], key [old_w | old_p], value old_w.
num::Var wpaa_forward(num::Var w_s, num::Var q_p, num::Var old_w, num::Var old_p, double scale);

struct GenerateResult {
  num::Var weights;      ///< final-layer output, way × D
  num::Var query_leaf;   ///< q_L, initialised from the new prototypes
};

/// Runs the stacked generator on `tape`. `p_old`, `w_old` are n_old × D,
/// `p_new` is way × D.
GenerateResult generate(num::Tape& tape, const BiagVars& vars, num::Var p_old, num::Var p_new,
                        num::Var w_old, const GeneratorOptions& options = {});

// Tape-free entry points. Each runs on a private tape.

num::Matrix scm_forward(const ScmParams& scm, const num::Matrix& x);
num::Matrix wsa_forward(const num::Matrix& q_w, const num::Matrix& carrier, double scale);
num::Matrix wpaa_forward(const num::Matrix& w_s, const num::Matrix& q_p,
                         const num::Matrix& old_w, const num::Matrix& old_p, double scale);
/// q_L := a fresh copy of the new-class prototypes.
num::Matrix init_query(const num::Matrix& p_new);

num::Matrix biag_generate(const BiagParams& params, const num::Matrix& p_old,
                          const num::Matrix& p_new, const num::Matrix& w_old,
                          const GeneratorOptions& options = {});

}  // namespace biag::gen
