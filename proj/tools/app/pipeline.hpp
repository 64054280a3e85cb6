#pragma once

#include <optional>
#include <string>

#include "biag/banks.hpp"
#include "biag/harness/protocol.hpp"
#include "biag/harness/synth.hpp"
#include "biag/nc/geometry.hpp"
#include "run_config.hpp"

namespace biag::app {

harness::SynthBank make_bank(const RunConfig& config);

struct Experiment {
  WeightBank w0;
  train::LossTrace base_trace;
  gen::BiagParams params;
  train::LossTrace biag_trace;
  harness::SessionReport report;
};

/// Base weights: the hidden truth on the base classes, or a trained
/// classifier. `rng` is the training stream.
WeightBank base_weights(const RunConfig& config, const FeatureBank& bank,
                        const std::optional<nc::AffineMap>& truth, num::Rng& rng,
                        train::LossTrace* trace);

harness::WeightGenerator biag_generator(const gen::BiagParams& params,
                                        const gen::GeneratorOptions& options);
harness::WeightGenerator oracle_generator(const nc::AffineMap& truth);

harness::SessionReport evaluate(const RunConfig& config, const FeatureBank& bank,
                                const WeightBank& w0, const harness::WeightGenerator& generator,
                                const train::LossTrace& biag_trace,
                                const train::LossTrace& base_trace);

/// Base weights, generator training and the session run, all from one config.
Experiment run_experiment(const RunConfig& config, const FeatureBank& bank,
                          const std::optional<nc::AffineMap>& truth);

struct EpisodeCosine {
  double mean = 0.0;
  double min = 0.0;
  std::size_t rows = 0;
};

/// Per-class cosine between generated and hidden-truth weights on freshly
/// drawn pseudo-incremental splits of the base classes.
EpisodeCosine pseudo_episode_cosine(const gen::BiagParams& params,
                                    const gen::GeneratorOptions& options,
                                    const harness::SynthBank& bank, std::size_t base,
                                    std::size_t way, std::size_t episodes, num::Rng& rng);

train::LossTrace parse_loss_trace_csv(const std::string& text);

}  // namespace biag::app
