#include "run_config.hpp"

#include <variant>

#include <nlohmann/json.hpp>

#include "biag/error.hpp"

namespace biag::app {

using nlohmann::json;

namespace {

// size_t and uint64_t may be the same type, so seeds get a wrapper.
struct SeedMember {
  std::uint64_t RunConfig::*member;
};

using Member = std::variant<std::size_t RunConfig::*, double RunConfig::*, bool RunConfig::*,
                            std::string RunConfig::*, SeedMember,
                            std::vector<std::size_t> RunConfig::*>;

struct Field {
  const char* name;
  Member member;
};

const std::vector<Field>& fields() {
  static const std::vector<Field> table{
      {"base", &RunConfig::base},
      {"sessions", &RunConfig::sessions},
      {"way", &RunConfig::way},
      {"shot", &RunConfig::shot},
      {"dim", &RunConfig::dim},
      {"noise_sigma", &RunConfig::noise_sigma},
      {"geometry", &RunConfig::geometry},
      {"affine_link", &RunConfig::affine_link},
      {"n_train", &RunConfig::n_train},
      {"n_test", &RunConfig::n_test},
      {"mean_norm", &RunConfig::mean_norm},
      {"subspace_rank", &RunConfig::subspace_rank},
      {"center_means", &RunConfig::center_means},
      {"link_scale", &RunConfig::link_scale},
      {"link_rotation", &RunConfig::link_rotation},
      {"base_weights", &RunConfig::base_weights},
      {"base_epochs", &RunConfig::base_epochs},
      {"base_lr", &RunConfig::base_lr},
      {"batch_size", &RunConfig::batch_size},
      {"cosine_head", &RunConfig::cosine_head},
      {"depth", &RunConfig::depth},
      {"scm_mode", &RunConfig::scm_mode},
      {"scm_kind", &RunConfig::scm_kind},
      {"hidden", &RunConfig::hidden},
      {"activation", &RunConfig::activation},
      {"scale_mode", &RunConfig::scale_mode},
      {"loss_mode", &RunConfig::loss_mode},
      {"variant", &RunConfig::variant},
      {"epochs", &RunConfig::epochs},
      {"lr", &RunConfig::lr},
      {"momentum", &RunConfig::momentum},
      {"weight_decay", &RunConfig::weight_decay},
      {"milestones", &RunConfig::milestones},
      {"gamma", &RunConfig::gamma},
      {"episode_way", &RunConfig::episode_way},
      {"episodes_per_epoch", &RunConfig::episodes_per_epoch},
      {"data_seed", SeedMember{&RunConfig::data_seed}},
      {"train_seed", SeedMember{&RunConfig::train_seed}},
      {"out", &RunConfig::out},
  };
  return table;
}

const Field& find_field(std::string_view key) {
  for (const auto& f : fields()) {
    if (key == f.name) return f;
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'", std::string(key));
}

std::uint64_t as_unsigned(const json& v, const char* name) {
  if (!v.is_number_unsigned()) {
    throw ConfigError(std::string(name) + " must be a non-negative integer", name);
  }
  return v.get<std::uint64_t>();
}

template <typename T>
void assign_value(T& slot, const char* name, const json& v) {
  if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) throw ConfigError(std::string(name) + " must be a boolean", name);
    slot = v.get<bool>();
  } else if constexpr (std::is_same_v<T, double>) {
    if (!v.is_number()) throw ConfigError(std::string(name) + " must be a number", name);
    slot = v.get<double>();
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) throw ConfigError(std::string(name) + " must be a string", name);
    slot = v.get<std::string>();
  } else if constexpr (std::is_same_v<T, std::vector<std::size_t>>) {
    if (!v.is_array()) throw ConfigError(std::string(name) + " must be an array", name);
    T out;
    for (const auto& e : v) out.push_back(static_cast<std::size_t>(as_unsigned(e, name)));
    slot = std::move(out);
  } else {
    slot = static_cast<T>(as_unsigned(v, name));
  }
}

template <typename M>
auto& slot_of(RunConfig& cfg, M member) {
  if constexpr (std::is_same_v<M, SeedMember>) {
    return cfg.*member.member;
  } else {
    return cfg.*member;
  }
}

template <typename M>
const auto& slot_of(const RunConfig& cfg, M member) {
  if constexpr (std::is_same_v<M, SeedMember>) {
    return cfg.*member.member;
  } else {
    return cfg.*member;
  }
}

void assign(RunConfig& cfg, const Field& f, const json& v) {
  std::visit([&](auto member) { assign_value(slot_of(cfg, member), f.name, v); }, f.member);
}

json to_json(const RunConfig& cfg) {
  json j = json::object();
  for (const auto& f : fields()) {
    std::visit([&](auto member) { j[f.name] = slot_of(cfg, member); }, f.member);
  }
  return j;
}

template <typename F>
void check_enum(const char* field, const std::string& value, F parse) {
  try {
    parse(value);
  } catch (const ConfigError& e) {
    throw ConfigError(e.what(), field);
  }
}

}  // namespace

void RunConfig::validate() const {
  protocol().validate();
  check_enum("geometry", geometry, harness::parse_geometry);
  check_enum("link_rotation", link_rotation, harness::parse_link_rotation);
  check_enum("scm_mode", scm_mode, gen::parse_scm_mode);
  check_enum("scm_kind", scm_kind, gen::parse_scm_kind);
  check_enum("activation", activation, gen::parse_activation);
  check_enum("scale_mode", scale_mode, gen::parse_scale_mode);
  check_enum("loss_mode", loss_mode, train::parse_loss_mode);
  check_enum("variant", variant, gen::parse_variant);
  if (noise_sigma < 0.0) throw ConfigError("noise_sigma must be non-negative", "noise_sigma");
  synth().validate(protocol().total_classes());
  if (base_weights != "truth" && base_weights != "trained") {
    throw ConfigError("base_weights must be 'truth' or 'trained'", "base_weights");
  }
  if (base_weights == "truth" && !affine_link) {
    throw ConfigError("base_weights = truth needs affine_link", "base_weights");
  }
  if (depth == 0) throw ConfigError("depth must be at least 1", "depth");
  if (n_train < shot) {
    throw ConfigError("n_train " + std::to_string(n_train) + " is below shot " +
                          std::to_string(shot),
                      "n_train");
  }
  base_training().validate(0);
  biag_training().validate(base);
}

harness::SessionProtocol RunConfig::protocol() const { return {base, sessions, way, shot}; }

harness::SynthConfig RunConfig::synth() const {
  harness::SynthConfig s;
  s.dim = dim;
  s.noise_sigma = noise_sigma;
  s.geometry = harness::parse_geometry(geometry);
  s.affine_link = affine_link;
  s.n_train = n_train;
  s.n_test = n_test;
  s.mean_norm = mean_norm;
  s.subspace_rank = subspace_rank;
  s.center_means = center_means;
  s.link_scale = link_scale;
  s.link_rotation = harness::parse_link_rotation(link_rotation);
  return s;
}

gen::BiagShape RunConfig::shape() const {
  gen::BiagShape s;
  s.dim = dim;
  s.way = episode_way > 0 ? episode_way : way;
  s.num_layers = depth;
  s.scm_mode = gen::parse_scm_mode(scm_mode);
  s.scm_kind = gen::parse_scm_kind(scm_kind);
  s.hidden = hidden;
  s.activation = gen::parse_activation(activation);
  return s;
}

gen::GeneratorOptions RunConfig::generator_options() const {
  return {gen::parse_scale_mode(scale_mode), gen::parse_variant(variant)};
}

train::TrainConfig RunConfig::biag_training() const {
  train::TrainConfig t;
  t.epochs = epochs;
  t.base_lr = lr;
  t.momentum = momentum;
  t.weight_decay = weight_decay;
  t.milestones = milestones;
  t.gamma = gamma;
  t.way = episode_way > 0 ? episode_way : way;
  t.episodes_per_epoch = episodes_per_epoch;
  t.loss_mode = train::parse_loss_mode(loss_mode);
  return t;
}

train::TrainConfig RunConfig::base_training() const {
  train::TrainConfig t;
  t.epochs = base_epochs;
  t.base_lr = base_lr;
  t.batch_size = batch_size;
  return t;
}

RunConfig config_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what(), "config");
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object", "config");
  RunConfig cfg;
  for (const auto& [key, value] : j.items()) assign(cfg, find_field(key), value);
  return cfg;
}

std::string config_to_json(const RunConfig& config, bool pretty) {
  return pretty ? to_json(config).dump(2) + "\n" : to_json(config).dump();
}

void apply_override(RunConfig& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override must look like key=value, got '" + std::string(assignment) + "'",
                      "set");
  }
  const std::string_view key = assignment.substr(0, eq);
  const std::string value(assignment.substr(eq + 1));
  const Field& f = find_field(key);
  json v = json::parse(value, nullptr, false);
  if (v.is_discarded() || (std::holds_alternative<std::string RunConfig::*>(f.member) && !v.is_string())) {
    v = value;
  }
  assign(config, f, v);
}

const std::vector<std::string>& ablation_variants() {
  static const std::vector<std::string> names{"full",       "no_wsa", "wpaa_only",
                                              "scm_linear", "depth2", "depth6"};
  return names;
}

RunConfig with_variant(RunConfig config, std::string_view name) {
  if (name == "full" || name == "no_wsa" || name == "wpaa_only") {
    config.variant = std::string(name);
  } else if (name == "scm_linear") {
    config.scm_kind = "linear";
  } else if (name == "depth2") {
    config.depth = 2;
  } else if (name == "depth6") {
    config.depth = 6;
  } else {
    throw ConfigError("unknown ablation variant '" + std::string(name) + "'", "variant");
  }
  return config;
}

}  // namespace biag::app
