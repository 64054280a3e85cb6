#include "biag/gen/params.hpp"

#include <cmath>

#include "biag/error.hpp"

namespace biag::gen {

using num::Matrix;

namespace {

Linear random_linear(std::size_t in, std::size_t out, num::Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  Linear l;
  l.weight = rng.uniform_matrix(out, in, -bound, bound);
  l.bias = rng.uniform_matrix(1, out, -bound, bound);
  return l;
}

void append_scm(std::vector<NamedTensor>& out, const std::string& prefix, ScmParams& scm) {
  for (std::size_t i = 0; i < scm.layers.size(); ++i) {
    const std::string layer = prefix + ".fc" + std::to_string(i + 1);
    out.push_back({layer + ".weight", &scm.layers[i].weight});
    out.push_back({layer + ".bias", &scm.layers[i].bias});
  }
}

void validate_scm(const ScmParams& scm, std::size_t dim, const char* name) {
  const std::size_t expected = scm.kind == ScmKind::kMlp ? 2 : 1;
  if (scm.layers.size() != expected) {
    throw ConfigError(std::string(name) + ": wrong layer count for its kind", "scm");
  }
  std::size_t in = dim;
  for (std::size_t i = 0; i < scm.layers.size(); ++i) {
    const auto& l = scm.layers[i];
    const std::size_t out = (i + 1 == scm.layers.size()) ? dim : scm.hidden;
    if (l.weight.rows() != out || l.weight.cols() != in || l.bias.rows() != 1 ||
        l.bias.cols() != out) {
      throw ShapeError(std::string(name) + ": layer " + std::to_string(i + 1) + " has weight " +
                       l.weight.shape_str() + " bias " + l.bias.shape_str());
    }
    in = out;
  }
}

}  // namespace

ScmParams ScmParams::random(std::size_t dim, ScmKind kind, std::size_t hidden,
                            num::Activation activation, num::Rng& rng) {
  ScmParams p;
  p.kind = kind;
  p.activation = activation;
  if (kind == ScmKind::kMlp) {
    p.hidden = hidden == 0 ? 2 * dim : hidden;
    p.layers.push_back(random_linear(dim, p.hidden, rng));
    p.layers.push_back(random_linear(p.hidden, dim, rng));
  } else {
    p.hidden = dim;
    p.layers.push_back(random_linear(dim, dim, rng));
  }
  return p;
}

ScmParams ScmParams::identity(std::size_t dim, ScmKind kind) {
  return affine(Matrix::identity(dim), Matrix(1, dim), kind);
}

ScmParams ScmParams::affine(const Matrix& linear, const Matrix& offset, ScmKind kind) {
  const std::size_t dim = linear.rows();
  ScmParams p;
  p.kind = kind;
  p.activation = num::Activation::kIdentity;
  p.hidden = dim;
  p.layers.push_back(Linear{linear, offset});
  if (kind == ScmKind::kMlp) p.layers.push_back(Linear{Matrix::identity(dim), Matrix(1, dim)});
  return p;
}

std::vector<NamedTensor> BiagParams::tensors() {
  std::vector<NamedTensor> out;
  if (scm_mode == ScmMode::kShared) {
    append_scm(out, "scm", scm);
  } else {
    append_scm(out, "scm_p2w", scm);
    append_scm(out, "scm_w2p", *scm_w2p);
  }
  out.push_back({"decoder_embedding", &decoder});
  return out;
}

std::vector<ConstNamedTensor> BiagParams::tensors() const {
  auto mut = const_cast<BiagParams*>(this)->tensors();
  std::vector<ConstNamedTensor> out;
  out.reserve(mut.size());
  for (auto& t : mut) out.push_back({std::move(t.name), t.value});
  return out;
}

void BiagParams::validate() const {
  if (dim == 0) throw ConfigError("biag: embedding dimension must be positive", "dim");
  if (num_layers == 0) throw ConfigError("biag: need at least one layer", "depth");
  if (decoder.cols() != dim || decoder.rows() == 0) {
    throw ShapeError("biag: decoder embedding " + decoder.shape_str() + " must be way x " +
                     std::to_string(dim));
  }
  validate_scm(scm, dim, "scm");
  if (scm_mode == ScmMode::kDirectional) {
    if (!scm_w2p) throw ConfigError("biag: directional mode needs a second SCM", "scm_mode");
    validate_scm(*scm_w2p, dim, "scm_w2p");
  } else if (scm_w2p) {
    throw ConfigError("biag: shared mode must not carry a second SCM", "scm_mode");
  }
}

bool BiagParams::operator==(const BiagParams& o) const {
  if (dim != o.dim || num_layers != o.num_layers || scm_mode != o.scm_mode) return false;
  auto same_scm = [](const ScmParams& a, const ScmParams& b) {
    if (a.kind != b.kind || a.activation != b.activation || a.hidden != b.hidden ||
        a.layers.size() != b.layers.size())
      return false;
    for (std::size_t i = 0; i < a.layers.size(); ++i) {
      if (!(a.layers[i].weight == b.layers[i].weight) || !(a.layers[i].bias == b.layers[i].bias))
        return false;
    }
    return true;
  };
  if (!same_scm(scm, o.scm)) return false;
  if (scm_w2p.has_value() != o.scm_w2p.has_value()) return false;
  if (scm_w2p && !same_scm(*scm_w2p, *o.scm_w2p)) return false;
  return decoder == o.decoder;
}

BiagParams init_params(const BiagShape& shape, num::Rng& rng) {
  if (shape.way == 0) throw ConfigError("biag: way must be positive", "way");
  BiagParams p;
  p.dim = shape.dim;
  p.num_layers = shape.num_layers;
  p.scm_mode = shape.scm_mode;
  p.scm = ScmParams::random(shape.dim, shape.scm_kind, shape.hidden, shape.activation, rng);
  if (shape.scm_mode == ScmMode::kDirectional) {
    p.scm_w2p = ScmParams::random(shape.dim, shape.scm_kind, shape.hidden, shape.activation, rng);
  }
  p.decoder = Matrix(shape.way, shape.dim);
  p.validate();
  return p;
}

std::string_view to_string(ScmMode m) { return m == ScmMode::kShared ? "shared" : "directional"; }
std::string_view to_string(ScmKind k) { return k == ScmKind::kMlp ? "mlp" : "linear"; }
std::string_view to_string(num::Activation a) {
  return a == num::Activation::kTanh ? "tanh" : "identity";
}

ScmMode parse_scm_mode(std::string_view s) {
  if (s == "shared") return ScmMode::kShared;
  if (s == "directional") return ScmMode::kDirectional;
  throw ConfigError("unknown scm mode '" + std::string(s) + "'", "scm_mode");
}

ScmKind parse_scm_kind(std::string_view s) {
  if (s == "mlp") return ScmKind::kMlp;
  if (s == "linear" || s == "single_linear") return ScmKind::kLinear;
  throw ConfigError("unknown scm kind '" + std::string(s) + "'", "scm_kind");
}

num::Activation parse_activation(std::string_view s) {
  if (s == "tanh") return num::Activation::kTanh;
  if (s == "identity") return num::Activation::kIdentity;
  throw ConfigError("unknown activation '" + std::string(s) + "'", "activation");
}

}  // namespace biag::gen
