#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "biag/gen/generator.hpp"
#include "biag/gen/params.hpp"
#include "biag/harness/protocol.hpp"
#include "biag/harness/synth.hpp"
#include "biag/train/training.hpp"

namespace biag::app {

/// Everything a run needs. Defaults are the reference synthetic benchmark.
struct RunConfig {
  // protocol
  std::size_t base = 60;
  std::size_t sessions = 8;
  std::size_t way = 5;
  std::size_t shot = 5;

  // synthetic bank
  std::size_t dim = 64;
  double noise_sigma = 0.05;
  std::string geometry = "random_directions";
  bool affine_link = true;
  std::size_t n_train = 20;
  std::size_t n_test = 20;
  double mean_norm = 2.0;
  std::size_t subspace_rank = 4;
  bool center_means = true;
  double link_scale = 0.0;
  std::string link_rotation = "identity";

  // base session
  std::string base_weights = "truth";  // truth | trained
  std::size_t base_epochs = 200;
  double base_lr = 0.1;
  std::size_t batch_size = 128;
  bool cosine_head = true;

  // generator
  std::size_t depth = 4;
  std::string scm_mode = "shared";
  std::string scm_kind = "mlp";
  std::size_t hidden = 0;
  std::string activation = "tanh";
  std::string scale_mode = "sqrt_d";
  std::string loss_mode = "row_mean";
  std::string variant = "full";

  // generator training
  std::size_t epochs = 200;
  double lr = 0.01;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  std::vector<std::size_t> milestones{100, 150};
  double gamma = 0.1;
  std::size_t episode_way = 0;  // 0: protocol way
  std::size_t episodes_per_epoch = 0;

  std::uint64_t data_seed = 0;
  std::uint64_t train_seed = 0;
  std::string out = "out";

  bool operator==(const RunConfig&) const = default;

  /// Cross-field checks; throws ConfigError naming the field.
  void validate() const;

  harness::SessionProtocol protocol() const;
  harness::SynthConfig synth() const;
  gen::BiagShape shape() const;
  gen::GeneratorOptions generator_options() const;
  train::TrainConfig biag_training() const;
  train::TrainConfig base_training() const;
};

/// Unknown keys and type mismatches throw ConfigError naming the key.
RunConfig config_from_json(std::string_view text);
std::string config_to_json(const RunConfig& config, bool pretty = false);

/// `key=value`; the value is read as JSON when it parses, else as a string.
void apply_override(RunConfig& config, std::string_view assignment);

/// Ablation names: full, no_wsa, wpaa_only, scm_linear, depth2, depth6.
const std::vector<std::string>& ablation_variants();
RunConfig with_variant(RunConfig config, std::string_view name);

}  // namespace biag::app
