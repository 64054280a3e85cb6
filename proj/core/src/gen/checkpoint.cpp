#include "biag/gen/checkpoint.hpp"

#include <map>

#include "biag/error.hpp"
#include "biag/io/binary.hpp"

namespace biag::gen {

namespace {
constexpr char kMagic[] = "BIAG";
}

std::vector<char> encode_checkpoint(const BiagParams& params) {
  params.validate();
  io::ByteWriter w;
  w.bytes(std::string_view(kMagic, 4));
  w.u16(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(params.dim));
  w.u32(static_cast<std::uint32_t>(params.num_layers));
  w.u8(static_cast<std::uint8_t>(params.scm_mode));
  w.u8(static_cast<std::uint8_t>(params.scm.kind));
  w.u8(static_cast<std::uint8_t>(params.scm.activation));
  for (const auto& t : params.tensors()) {
    w.u32(static_cast<std::uint32_t>(t.name.size()));
    w.bytes(t.name);
    w.matrix(*t.value);
  }
  return w.take();
}

BiagParams decode_checkpoint(std::span<const char> bytes) {
  io::ByteReader r(bytes);
  if (r.bytes(4, "magic") != std::string_view(kMagic, 4)) {
    throw FormatError("not a generator checkpoint (bad magic)", 0);
  }
  const std::size_t version_at = r.offset();
  const std::uint16_t version = r.u16("version");
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version), version_at);
  }
  const std::uint32_t dim = r.u32("dimension");
  const std::uint32_t layers = r.u32("layer count");
  const std::size_t mode_at = r.offset();
  const std::uint8_t mode = r.u8("scm mode");
  const std::uint8_t kind = r.u8("scm kind");
  const std::uint8_t act = r.u8("activation");
  if (mode > 1 || kind > 1 || act > 1) {
    throw FormatError("invalid scm mode/kind/activation code", mode_at);
  }

  std::vector<std::pair<std::string, num::Matrix>> tensors;
  std::vector<std::size_t> offsets;
  while (!r.at_end()) {
    offsets.push_back(r.offset());
    const std::uint32_t len = r.u32("tensor name length");
    std::string name = r.bytes(len, "tensor name");
    tensors.emplace_back(std::move(name), r.matrix("tensor"));
  }

  BiagParams p;
  p.dim = dim;
  p.num_layers = layers;
  p.scm_mode = static_cast<ScmMode>(mode);
  auto make_scm = [&]() {
    ScmParams s;
    s.kind = static_cast<ScmKind>(kind);
    s.activation = static_cast<num::Activation>(act);
    s.layers.resize(s.kind == ScmKind::kMlp ? 2 : 1);
    return s;
  };
  p.scm = make_scm();
  if (p.scm_mode == ScmMode::kDirectional) p.scm_w2p = make_scm();
  p.decoder = num::Matrix(1, dim);

  auto slots = p.tensors();
  if (slots.size() != tensors.size()) {
    throw FormatError("checkpoint holds " + std::to_string(tensors.size()) +
                          " tensors, header implies " + std::to_string(slots.size()),
                      r.offset());
  }
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i].name != tensors[i].first) {
      throw FormatError("expected tensor '" + slots[i].name + "', found '" + tensors[i].first + "'",
                        offsets[i]);
    }
    *slots[i].value = std::move(tensors[i].second);
  }
  for (ScmParams* s : {&p.scm, p.scm_w2p ? &*p.scm_w2p : nullptr}) {
    if (s != nullptr && !s->layers.empty()) s->hidden = s->layers.front().weight.rows();
  }
  try {
    p.validate();
  } catch (const Error& e) {
    throw FormatError(std::string("inconsistent checkpoint: ") + e.what(), r.offset());
  }
  return p;
}

void save_checkpoint(const BiagParams& params, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(params);
  io::atomic_write_file(path, bytes);
}

BiagParams load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(io::read_file(path));
}

}  // namespace biag::gen
