#include "biag/train/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "biag/error.hpp"
#include "biag/num/optim.hpp"

namespace biag::train {

using num::Matrix;
using num::Var;

std::string_view to_string(LossMode m) {
  return m == LossMode::kRowMean ? "row_mean" : "flattened";
}

LossMode parse_loss_mode(std::string_view s) {
  if (s == "row_mean") return LossMode::kRowMean;
  if (s == "flattened") return LossMode::kFlattened;
  throw ConfigError("unknown loss mode '" + std::string(s) + "'", "loss_mode");
}

void TrainConfig::validate(std::size_t n_base) const {
  if (!(base_lr >= 0.0) || !std::isfinite(base_lr)) {
    throw ConfigError("learning rate must be finite and non-negative", "base_lr");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw ConfigError("momentum must lie in [0, 1)", "momentum");
  }
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) {
    throw ConfigError("weight decay must be finite and non-negative", "weight_decay");
  }
  if (batch_size == 0) throw ConfigError("batch size must be positive", "batch_size");
  if (!(gamma > 0.0)) throw ConfigError("gamma must be positive", "gamma");
  if (!std::is_sorted(milestones.begin(), milestones.end())) {
    throw ConfigError("milestones must be ascending", "milestones");
  }
  if (way == 0) throw ConfigError("way must be positive", "way");
  if (n_base > 0 && way >= n_base) {
    throw ConfigError("way " + std::to_string(way) + " leaves no pseudo-old classes among " +
                          std::to_string(n_base),
                      "way");
  }
}

std::string loss_trace_csv(const LossTrace& trace) {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,mean_lg,mean_lcls\n";
  for (std::size_t e = 0; e < trace.epochs(); ++e) {
    out << e << ',';
    if (e < trace.mean_lg.size()) out << trace.mean_lg[e];
    out << ',';
    if (e < trace.mean_lcls.size()) out << trace.mean_lcls[e];
    out << '\n';
  }
  return out.str();
}

EpisodeSpec sample_episode(std::span<const ClassId> base_classes, std::size_t way,
                           num::Rng& rng) {
  if (way == 0 || way >= base_classes.size()) {
    throw ConfigError("episode needs 0 < way < " + std::to_string(base_classes.size()) +
                          ", got " + std::to_string(way),
                      "way");
  }
  EpisodeSpec ep;
  ep.seed = rng.split();
  std::vector<ClassId> pool(base_classes.begin(), base_classes.end());
  std::mt19937_64 engine(ep.seed);
  // Partial Fisher-Yates: the first `way` slots are a uniform draw.
  for (std::size_t i = 0; i < way; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(engine)]);
  }
  ep.pseudo_new.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(way));
  std::vector<ClassId> chosen = ep.pseudo_new;
  std::sort(chosen.begin(), chosen.end());
  for (ClassId id : base_classes) {
    if (!std::binary_search(chosen.begin(), chosen.end(), id)) ep.pseudo_old.push_back(id);
  }
  return ep;
}

double analogical_loss(const Matrix& generated, const Matrix& target, LossMode mode) {
  if (!generated.same_shape(target)) {
    throw ShapeError("analogical loss: " + generated.shape_str() + " vs " + target.shape_str());
  }
  if (generated.empty()) throw DegenerateInputError("analogical loss of empty matrices");
  if (mode == LossMode::kFlattened) {
    const double ng = num::frobenius_norm(generated);
    const double nt = num::frobenius_norm(target);
    if (ng == 0.0 || nt == 0.0) throw DegenerateInputError("analogical loss: zero matrix");
    return 1.0 - num::dot(generated.data(), target.data()) / (ng * nt);
  }
  const std::vector<double> cos = num::row_cosine(generated, target);
  return 1.0 - std::accumulate(cos.begin(), cos.end(), 0.0) / static_cast<double>(cos.size());
}

Var analogical_loss(Var generated, Var target, LossMode mode) {
  if (!generated.value().same_shape(target.value())) {
    throw ShapeError("analogical loss: " + generated.value().shape_str() + " vs " +
                     target.value().shape_str());
  }
  if (mode == LossMode::kFlattened) {
    Var c = num::ad::sum(num::ad::hadamard(num::ad::frobenius_normalize(generated),
                                           num::ad::frobenius_normalize(target)));
    return num::ad::add_scalar(num::ad::scale(c, -1.0), 1.0);
  }
  Var c = num::ad::sum(
      num::ad::hadamard(num::ad::row_normalize(generated), num::ad::row_normalize(target)));
  return num::ad::add_scalar(num::ad::scale(c, -1.0 / static_cast<double>(generated.rows())),
                             1.0);
}

namespace {

std::size_t argmax_row(const Matrix& m, std::size_t r) {
  auto row = m.row(r);
  return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

}  // namespace

BaseClassifierFit train_base_classifier(const FeatureBank& bank,
                                        std::span<const ClassId> base_ids,
                                        const TrainConfig& config, num::Rng& rng) {
  config.validate(0);
  if (base_ids.empty()) throw DegenerateInputError("base classifier: no classes");
  const std::size_t dim = bank.dim;

  std::vector<std::size_t> labels;
  std::vector<const double*> samples;
  for (std::size_t c = 0; c < base_ids.size(); ++c) {
    const Matrix& train = bank.at(base_ids[c]).train;
    for (std::size_t s = 0; s < train.rows(); ++s) {
      labels.push_back(c);
      samples.push_back(train.row(s).data());
    }
  }
  const std::size_t n = labels.size();

  const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
  Matrix w = rng.uniform_matrix(base_ids.size(), dim, -bound, bound);
  num::OptimState state(config.base_lr, config.momentum, config.weight_decay);

  BaseClassifierFit fit;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    state.set_epoch(epoch);
    state.set_learning_rate(num::lr_schedule(config.base_lr, epoch, config.milestones,
                                             config.gamma));
    std::shuffle(order.begin(), order.end(), rng.engine());
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t stop = std::min(n, start + config.batch_size);
      Matrix x(stop - start, dim);
      std::vector<std::size_t> y(stop - start);
      for (std::size_t i = start; i < stop; ++i) {
        std::copy_n(samples[order[i]], dim, x.row(i - start).begin());
        y[i - start] = labels[order[i]];
      }
      num::Tape tape;
      Var wv = tape.leaf(w);
      Var xv = tape.leaf(std::move(x));
      Var loss = num::ad::softmax_cross_entropy(num::ad::matmul_nt(xv, wv), y);
      tape.backward(loss);
      loss_sum += loss.value().item() * static_cast<double>(stop - start);
      Matrix* p = &w;
      const Matrix g = tape.grad(wv);
      num::sgd_step(std::span<Matrix* const>(&p, 1), std::span<const Matrix>(&g, 1), state);
    }
    const double mean_loss = loss_sum / static_cast<double>(n);
    if (!std::isfinite(mean_loss)) {
      throw NumericError("base classifier: loss became non-finite at epoch " +
                         std::to_string(epoch));
    }
    fit.trace.mean_lcls.push_back(mean_loss);
  }

  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    Matrix x(1, dim);
    std::copy_n(samples[i], dim, x.row(0).begin());
    if (argmax_row(num::matmul_nt(x, w), 0) == labels[i]) ++correct;
  }
  fit.train_accuracy = 100.0 * static_cast<double>(correct) / static_cast<double>(n);
  fit.weights = WeightBank(std::vector<ClassId>(base_ids.begin(), base_ids.end()), std::move(w));
  return fit;
}

Var episode_loss(num::Tape& tape, const gen::BiagVars& vars, const Matrix& p_old,
                 const Matrix& p_new, const Matrix& w_old, const Matrix& w_new, LossMode mode,
                 const gen::GeneratorOptions& options) {
  Var po = tape.leaf(p_old);
  Var pn = tape.leaf(p_new);
  Var wo = tape.leaf(w_old);
  Var wn = tape.leaf(w_new);
  auto out = gen::generate(tape, vars, po, pn, wo, options);
  return analogical_loss(out.weights, wn, mode);
}

BiagFit train_biag(gen::BiagParams params, const FeatureBank& bank, const WeightBank& w0,
                   const TrainConfig& config, const gen::GeneratorOptions& options,
                   num::Rng& rng) {
  params.validate();
  config.validate(w0.size());
  if (params.dim != bank.dim || w0.dim() != bank.dim) {
    throw ShapeError("generator training: widths " + std::to_string(params.dim) + "/" +
                     std::to_string(w0.dim()) + " do not match bank width " +
                     std::to_string(bank.dim));
  }
  if (options.variant == gen::Variant::kFull && params.way() != config.way) {
    throw ConfigError("decoder embedding has " + std::to_string(params.way()) +
                          " rows but episodes use way " + std::to_string(config.way),
                      "way");
  }

  const std::vector<ClassId>& ids = w0.ids();
  const PrototypeBank protos = compute_prototypes(bank, ids);
  const std::size_t episodes = config.episodes_per_epoch > 0
                                   ? config.episodes_per_epoch
                                   : (ids.size() + config.way - 1) / config.way;

  auto gather = [&](const Matrix& src, const std::vector<ClassId>& want) {
    std::vector<std::size_t> rows;
    rows.reserve(want.size());
    for (ClassId id : want) rows.push_back(*w0.index_of(id));
    return num::select_rows(src, rows);
  };

  num::OptimState state(config.base_lr, config.momentum, config.weight_decay);
  BiagFit fit;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    state.set_epoch(epoch);
    state.set_learning_rate(num::lr_schedule(config.base_lr, epoch, config.milestones,
                                             config.gamma));
    double loss_sum = 0.0;
    for (std::size_t e = 0; e < episodes; ++e) {
      const EpisodeSpec ep = sample_episode(ids, config.way, rng);
      num::Tape tape;
      const gen::BiagVars vars = gen::bind(tape, params);
      Var loss = episode_loss(tape, vars, gather(protos.rows, ep.pseudo_old),
                              gather(protos.rows, ep.pseudo_new), gather(w0.rows(), ep.pseudo_old),
                              gather(w0.rows(), ep.pseudo_new), config.loss_mode, options);
      tape.backward(loss);
      const double value = loss.value().item();
      if (!std::isfinite(value)) {
        throw NumericError("generator training: loss became non-finite at epoch " +
                           std::to_string(epoch));
      }
      loss_sum += value;

      auto slots = params.tensors();
      std::vector<Matrix*> ptrs;
      std::vector<Matrix> grads;
      ptrs.reserve(slots.size());
      grads.reserve(slots.size());
      for (std::size_t i = 0; i < slots.size(); ++i) {
        ptrs.push_back(slots[i].value);
        grads.push_back(tape.grad(vars.leaves[i]));
      }
      num::sgd_step(ptrs, grads, state);
    }
    fit.trace.mean_lg.push_back(loss_sum / static_cast<double>(episodes));
  }
  fit.params = std::move(params);
  return fit;
}

}  // namespace biag::train
