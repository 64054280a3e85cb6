#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "biag/banks.hpp"
#include "biag/gen/generator.hpp"
#include "biag/gen/params.hpp"
#include "biag/num/matrix.hpp"
#include "biag/num/rng.hpp"
#include "biag/num/tape.hpp"

namespace biag::train {

/// Reading of the matrix cosine in the analogical loss.
///  - kRowMean: 1 − mean_i cos(g_i, w_i)
///  - kFlattened: 1 − cos(vec(g), vec(w))
enum class LossMode { kRowMean, kFlattened };

std::string_view to_string(LossMode m);
LossMode parse_loss_mode(std::string_view s);

struct TrainConfig {
  std::size_t epochs = 200;
  double base_lr = 0.1;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  std::size_t batch_size = 128;
  std::vector<std::size_t> milestones{100, 150};
  double gamma = 0.1;
  /// Pseudo-new classes per episode.
  std::size_t way = 5;
  /// 0 → ⌈|base| / way⌉ episodes per epoch.
  std::size_t episodes_per_epoch = 0;
  LossMode loss_mode = LossMode::kRowMean;

  /// Throws ConfigError naming the field. `n_base` is the number of base
  /// classes available to the episode sampler.
  void validate(std::size_t n_base) const;
};

/// Per-epoch means. `mean_lcls` is empty for generator training and
/// `mean_lg` is empty for classifier training.
struct LossTrace {
  std::vector<double> mean_lg;
  std::vector<double> mean_lcls;

  std::size_t epochs() const noexcept { return std::max(mean_lg.size(), mean_lcls.size()); }
  bool operator==(const LossTrace&) const = default;
};

/// CSV with header `epoch,mean_lg,mean_lcls`; absent values are empty cells.
std::string loss_trace_csv(const LossTrace& trace);

struct EpisodeSpec {
  std::vector<ClassId> pseudo_old;
  std::vector<ClassId> pseudo_new;
  std::uint64_t seed = 0;
};

/// Uniformly draws `way` pseudo-new classes without replacement; the rest are
/// pseudo-old. Throws ConfigError if way ≥ |base|.
EpisodeSpec sample_episode(std::span<const ClassId> base_classes, std::size_t way, num::Rng& rng);

double analogical_loss(const num::Matrix& generated, const num::Matrix& target, LossMode mode);
num::Var analogical_loss(num::Var generated, num::Var target, LossMode mode);

struct BaseClassifierFit {
  WeightBank weights;
  LossTrace trace;
  double train_accuracy = 0.0;  ///< percent, after the last epoch
};

/// Fits a bias-free linear softmax classifier on fixed train features of
/// `base_ids` with SGD + momentum + weight decay and the step schedule.
BaseClassifierFit train_base_classifier(const FeatureBank& bank,
                                        std::span<const ClassId> base_ids,
                                        const TrainConfig& config, num::Rng& rng);

struct BiagFit {
  gen::BiagParams params;
  LossTrace trace;
};

/// Pseudo-incremental training: every episode splits the classes of `w0`
/// into pseudo-old/new, generates the new weights from the old knowledge and
/// minimises the analogical loss against the true weights. Only generator
/// tensors are updated.
BiagFit train_biag(gen::BiagParams params, const FeatureBank& bank, const WeightBank& w0,
                   const TrainConfig& config, const gen::GeneratorOptions& options,
                   num::Rng& rng);

/// Loss of one fixed episode, used by the overfit check and gradient tests.
num::Var episode_loss(num::Tape& tape, const gen::BiagVars& vars, const num::Matrix& p_old,
                      const num::Matrix& p_new, const num::Matrix& w_old,
                      const num::Matrix& w_new, LossMode mode,
                      const gen::GeneratorOptions& options);

}  // namespace biag::train
