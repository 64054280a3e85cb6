#include "biag/gen/generator.hpp"

#include <cmath>

#include "biag/error.hpp"

namespace biag::gen {

using num::Matrix;
using num::Tape;
using num::Var;
namespace ad = num::ad;

std::string_view to_string(ScaleMode m) {
  return m == ScaleMode::kSqrtD ? "sqrt_d" : "sqrt_width";
}

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::kFull:
      return "full";
    case Variant::kNoWsa:
      return "no_wsa";
    case Variant::kWpaaOnly:
      return "wpaa_only";
  }
  return "full";
}

ScaleMode parse_scale_mode(std::string_view s) {
  if (s == "sqrt_d") return ScaleMode::kSqrtD;
  if (s == "sqrt_width") return ScaleMode::kSqrtWidth;
  throw ConfigError("unknown scale mode '" + std::string(s) + "'", "scale_mode");
}

Variant parse_variant(std::string_view s) {
  if (s == "full") return Variant::kFull;
  if (s == "no_wsa") return Variant::kNoWsa;
  if (s == "wpaa_only") return Variant::kWpaaOnly;
  throw ConfigError("unknown generator variant '" + std::string(s) + "'", "variant");
}

namespace {

ScmVars bind_scm(const ScmParams& scm, std::span<const Var> leaves, std::size_t& cursor) {
  ScmVars v;
  v.kind = scm.kind;
  v.activation = scm.activation;
  for (std::size_t i = 0; i < scm.layers.size(); ++i) {
    v.layers.emplace_back(leaves[cursor], leaves[cursor + 1]);
    cursor += 2;
  }
  return v;
}

void require_width(const Var& v, std::size_t dim, const char* what) {
  if (v.cols() != dim) {
    throw ShapeError(std::string(what) + " has width " + std::to_string(v.cols()) +
                     ", expected embedding dimension " + std::to_string(dim));
  }
}

}  // namespace

BiagVars bind(Tape& tape, const BiagParams& params) {
  std::vector<Var> leaves;
  for (const auto& t : params.tensors()) leaves.push_back(tape.leaf(*t.value));
  return gen::bind(params, leaves);
}

BiagVars bind(const BiagParams& params, std::span<const Var> leaves) {
  const std::size_t expected = params.tensors().size();
  if (leaves.size() != expected) {
    throw ContractError("bind: expected " + std::to_string(expected) + " leaves, got " +
                        std::to_string(leaves.size()));
  }
  BiagVars v;
  v.num_layers = params.num_layers;
  v.scm_mode = params.scm_mode;
  std::size_t cursor = 0;
  v.p2w = bind_scm(params.scm, leaves, cursor);
  v.w2p = params.scm_mode == ScmMode::kDirectional ? bind_scm(*params.scm_w2p, leaves, cursor)
                                                   : v.p2w;
  v.decoder = leaves[cursor];
  v.leaves.assign(leaves.begin(), leaves.end());
  return v;
}

Var scm_forward(const ScmVars& scm, Var x) {
  Var h = x;
  for (std::size_t i = 0; i < scm.layers.size(); ++i) {
    const auto& [w, b] = scm.layers[i];
    if (h.cols() != w.cols()) {
      throw ShapeError("scm: input width " + std::to_string(h.cols()) + " does not match layer " +
                       std::to_string(i + 1) + " fan-in " + std::to_string(w.cols()));
    }
    h = ad::add_row(ad::matmul_nt(h, w), b);
    if (i + 1 < scm.layers.size()) h = ad::activate(h, scm.activation);
  }
  return h;
}

Var wsa_forward(Var q_w, Var carrier, double scale) {
  if (!q_w.value().same_shape(carrier.value())) {
    throw ShapeError("wsa: query " + q_w.value().shape_str() + " and carrier " +
                     carrier.value().shape_str() + " must both be way x D");
  }
  Var qk = ad::add(q_w, carrier);
  return ad::scaled_dot_attention(qk, qk, carrier, scale);
}

Var wpaa_forward(Var w_s, Var q_p, Var old_w, Var old_p, double scale) {
  if (old_w.rows() == 0 || old_p.rows() == 0) {
    throw DegenerateInputError("wpaa: empty knowledge base (no old classes)");
  }
  if (!w_s.value().same_shape(q_p.value())) {
    throw ShapeError("wpaa: supplementary weights " + w_s.value().shape_str() +
                     " and prototype query " + q_p.value().shape_str() + " differ");
  }
  if (!old_w.value().same_shape(old_p.value())) {
    throw ShapeError("wpaa: old weights " + old_w.value().shape_str() + " and old prototypes " +
                     old_p.value().shape_str() + " differ");
  }
  if (w_s.cols() != old_w.cols()) {
    throw ShapeError("wpaa: query width " + std::to_string(w_s.cols()) + " vs key width " +
                     std::to_string(old_w.cols()));
  }
  Var query = ad::concat_cols(w_s, q_p);
  Var key = ad::concat_cols(old_w, old_p);
  return ad::scaled_dot_attention(query, key, old_w, scale);
}

GenerateResult generate(Tape& tape, const BiagVars& vars, Var p_old, Var p_new, Var w_old,
                        const GeneratorOptions& options) {
  const std::size_t dim = vars.decoder.cols();
  require_width(p_old, dim, "old prototypes");
  require_width(p_new, dim, "new prototypes");
  require_width(w_old, dim, "old weights");
  if (p_old.rows() != w_old.rows()) {
    throw ShapeError("generate: " + std::to_string(p_old.rows()) + " old prototypes but " +
                     std::to_string(w_old.rows()) + " old weights");
  }
  if (p_old.rows() == 0) throw DegenerateInputError("generate: no old classes");
  if (options.variant == Variant::kFull && p_new.rows() != vars.decoder.rows()) {
    throw ShapeError("generate: " + std::to_string(p_new.rows()) +
                     " new classes but the decoder embedding was trained for way " +
                     std::to_string(vars.decoder.rows()));
  }

  const double d = static_cast<double>(dim);
  const double wsa_scale = std::sqrt(d);
  const double wpaa_scale =
      options.scale_mode == ScaleMode::kSqrtD ? std::sqrt(d) : std::sqrt(2.0 * d);

  GenerateResult out;
  out.query_leaf = tape.leaf(init_query(p_new.value()));
  Var q_l = out.query_leaf;
  Var layer_out;
  for (std::size_t n = 1; n <= vars.num_layers; ++n) {
    Var q_w = scm_forward(vars.p2w, q_l);
    Var q_p = vars.scm_mode == ScmMode::kShared ? q_w : scm_forward(vars.w2p, q_l);
    Var w_s = q_w;
    if (options.variant == Variant::kFull) {
      Var carrier = n == 1 ? vars.decoder : layer_out;
      w_s = wsa_forward(q_w, carrier, wsa_scale);
    }
    layer_out = wpaa_forward(w_s, q_p, w_old, p_old, wpaa_scale);
    if (n < vars.num_layers && options.variant != Variant::kWpaaOnly) {
      q_l = ad::add(scm_forward(vars.w2p, layer_out), q_l);
    }
  }
  out.weights = layer_out;
  return out;
}

Matrix scm_forward(const ScmParams& scm, const Matrix& x) {
  Tape tape;
  std::vector<Var> leaves;
  for (const auto& l : scm.layers) {
    leaves.push_back(tape.leaf(l.weight));
    leaves.push_back(tape.leaf(l.bias));
  }
  std::size_t cursor = 0;
  const ScmVars vars = bind_scm(scm, leaves, cursor);
  return scm_forward(vars, tape.leaf(x)).value();
}

Matrix wsa_forward(const Matrix& q_w, const Matrix& carrier, double scale) {
  Tape tape;
  return wsa_forward(tape.leaf(q_w), tape.leaf(carrier), scale).value();
}

Matrix wpaa_forward(const Matrix& w_s, const Matrix& q_p, const Matrix& old_w,
                    const Matrix& old_p, double scale) {
  Tape tape;
  return wpaa_forward(tape.leaf(w_s), tape.leaf(q_p), tape.leaf(old_w), tape.leaf(old_p), scale)
      .value();
}

Matrix init_query(const Matrix& p_new) { return Matrix(p_new); }

Matrix biag_generate(const BiagParams& params, const Matrix& p_old, const Matrix& p_new,
                     const Matrix& w_old, const GeneratorOptions& options) {
  params.validate();
  Tape tape;
  const BiagVars vars = gen::bind(tape, params);
  return generate(tape, vars, tape.leaf(p_old), tape.leaf(p_new), tape.leaf(w_old), options)
      .weights.value();
}

}  // namespace biag::gen
