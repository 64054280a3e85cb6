#include "pipeline.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "biag/error.hpp"

namespace biag::app {

using num::Matrix;

harness::SynthBank make_bank(const RunConfig& config) {
  config.validate();
  num::Rng rng(config.data_seed);
  return harness::synth_bank(config.protocol(), config.synth(), rng);
}

WeightBank base_weights(const RunConfig& config, const FeatureBank& bank,
                        const std::optional<nc::AffineMap>& truth, num::Rng& rng,
                        train::LossTrace* trace) {
  const auto proto = config.protocol();
  const auto all = harness::protocol_classes(proto, bank);
  const std::vector<ClassId> ids(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(proto.base));
  if (config.base_weights == "truth") {
    if (!truth) throw ConfigError("base_weights = truth but no affine map is available", "base_weights");
    const auto protos = compute_prototypes(bank, ids);
    return WeightBank(ids, nc::affine_oracle_apply(*truth, protos.rows));
  }
  auto fit = train::train_base_classifier(bank, ids, config.base_training(), rng);
  if (trace != nullptr) *trace = fit.trace;
  return std::move(fit.weights);
}

harness::WeightGenerator biag_generator(const gen::BiagParams& params,
                                        const gen::GeneratorOptions& options) {
  return [params, options](const Matrix& p_old, const Matrix& p_new, const Matrix& w_old) {
    return gen::biag_generate(params, p_old, p_new, w_old, options);
  };
}

harness::WeightGenerator oracle_generator(const nc::AffineMap& truth) {
  return [truth](const Matrix&, const Matrix& p_new, const Matrix&) {
    return nc::affine_oracle_apply(truth, p_new);
  };
}

harness::SessionReport evaluate(const RunConfig& config, const FeatureBank& bank,
                                const WeightBank& w0, const harness::WeightGenerator& generator,
                                const train::LossTrace& biag_trace,
                                const train::LossTrace& base_trace) {
  harness::RunOptions opts;
  opts.cosine_head = config.cosine_head;
  auto report = harness::run_sessions(config.protocol(), bank, w0, generator, opts);
  report.lg = biag_trace;
  report.lcls = base_trace;
  report.config_echo = config_to_json(config);
  return report;
}

Experiment run_experiment(const RunConfig& config, const FeatureBank& bank,
                          const std::optional<nc::AffineMap>& truth) {
  config.validate();
  num::Rng rng(config.train_seed);
  Experiment ex;
  ex.w0 = base_weights(config, bank, truth, rng, &ex.base_trace);
  auto init = gen::init_params(config.shape(), rng);
  auto fit = train::train_biag(std::move(init), bank, ex.w0, config.biag_training(),
                               config.generator_options(), rng);
  ex.params = std::move(fit.params);
  ex.biag_trace = std::move(fit.trace);
  ex.report = evaluate(config, bank, ex.w0, biag_generator(ex.params, config.generator_options()),
                       ex.biag_trace, ex.base_trace);
  return ex;
}

EpisodeCosine pseudo_episode_cosine(const gen::BiagParams& params,
                                    const gen::GeneratorOptions& options,
                                    const harness::SynthBank& bank, std::size_t base,
                                    std::size_t way, std::size_t episodes, num::Rng& rng) {
  std::vector<ClassId> ids(base);
  std::iota(ids.begin(), ids.end(), ClassId{0});
  const Matrix truth = bank.true_weights(ids);
  const auto protos = compute_prototypes(bank.bank, ids);
  EpisodeCosine out;
  out.min = 1.0;
  double sum = 0.0;
  for (std::size_t e = 0; e < episodes; ++e) {
    const auto ep = train::sample_episode(ids, way, rng);
    auto rows = [](const Matrix& m, const std::vector<ClassId>& want) {
      std::vector<std::size_t> idx(want.begin(), want.end());
      return num::select_rows(m, idx);
    };
    const Matrix g = gen::biag_generate(params, rows(protos.rows, ep.pseudo_old),
                                        rows(protos.rows, ep.pseudo_new),
                                        rows(truth, ep.pseudo_old), options);
    for (double c : num::row_cosine(g, rows(truth, ep.pseudo_new))) {
      sum += c;
      out.min = std::min(out.min, c);
      ++out.rows;
    }
  }
  out.mean = out.rows > 0 ? sum / static_cast<double>(out.rows) : 0.0;
  return out;
}

train::LossTrace parse_loss_trace_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "epoch,mean_lg,mean_lcls") {
    throw FormatError("loss trace: unexpected header", 0);
  }
  train::LossTrace trace;
  std::size_t offset = line.size() + 1;
  while (std::getline(in, line)) {
    const auto a = line.find(',');
    const auto b = line.find(',', a + 1);
    if (a == std::string::npos || b == std::string::npos) {
      throw FormatError("loss trace: malformed row", offset);
    }
    const std::string lg = line.substr(a + 1, b - a - 1);
    const std::string lcls = line.substr(b + 1);
    try {
      if (!lg.empty()) trace.mean_lg.push_back(std::stod(lg));
      if (!lcls.empty()) trace.mean_lcls.push_back(std::stod(lcls));
    } catch (const std::exception&) {
      throw FormatError("loss trace: bad number", offset);
    }
    offset += line.size() + 1;
  }
  return trace;
}

}  // namespace biag::app
