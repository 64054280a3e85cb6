#include "biag/harness/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "biag/error.hpp"

namespace biag::harness {

using num::Matrix;

void SessionProtocol::validate() const {
  if (base == 0) throw ConfigError("protocol needs at least one base class", "base");
  if (way == 0) throw ConfigError("protocol way must be positive", "way");
  if (shot == 0) throw ConfigError("protocol shot must be at least 1", "shot");
}

SessionProtocol parse_protocol_preset(std::string_view name) {
  if (name == "cifar" || name == "cifar100") return SessionProtocol::cifar();
  if (name == "mini" || name == "miniimagenet") return SessionProtocol::mini_imagenet();
  if (name == "cub" || name == "cub200") return SessionProtocol::cub();
  throw ConfigError("unknown protocol preset '" + std::string(name) + "'", "protocol");
}

std::vector<ClassId> classify(const WeightBank& weights, const Matrix& features,
                              bool cosine_head) {
  if (weights.size() == 0) throw DegenerateInputError("classify: empty weight bank");
  if (features.cols() != weights.dim()) {
    throw ShapeError("classify: features have width " + std::to_string(features.cols()) +
                     ", weights " + std::to_string(weights.dim()));
  }
  const Matrix scores = cosine_head ? num::matmul_nt(num::row_normalize(features),
                                                     num::row_normalize(weights.rows()))
                                    : num::matmul_nt(features, weights.rows());
  const auto& ids = weights.ids();
  std::vector<ClassId> out(features.rows());
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    auto row = scores.row(i);
    std::size_t best = 0;
    for (std::size_t k = 1; k < row.size(); ++k) {
      if (row[k] > row[best] || (row[k] == row[best] && ids[k] < ids[best])) best = k;
    }
    out[i] = ids[best];
  }
  return out;
}

double round2(double pct) { return std::round(pct * 100.0) / 100.0; }

double average_accuracy(std::span<const double> per_session) {
  if (per_session.empty()) throw ContractError("average of zero sessions");
  return std::accumulate(per_session.begin(), per_session.end(), 0.0) /
         static_cast<double>(per_session.size());
}

double improvement(double ours, double baseline) { return round2(ours) - round2(baseline); }

namespace {

double tally_pct(std::span<const ClassTally> tallies) {
  std::size_t correct = 0;
  std::size_t total = 0;
  for (const auto& t : tallies) {
    correct += t.correct;
    total += t.total;
  }
  if (total == 0) return 0.0;
  return round2(100.0 * static_cast<double>(correct) / static_cast<double>(total));
}

}  // namespace

SessionMetrics compute_metrics(std::span<const double> per_session_acc,
                               std::span<const ClassTally> final_tallies,
                               const SessionProtocol& protocol) {
  if (per_session_acc.size() != protocol.sessions + 1) {
    throw ContractError("expected " + std::to_string(protocol.sessions + 1) +
                        " session accuracies, got " + std::to_string(per_session_acc.size()));
  }
  SessionMetrics m;
  m.average = average_accuracy(per_session_acc);
  m.final_acc = per_session_acc.back();
  if (final_tallies.empty()) return m;
  if (final_tallies.size() != protocol.total_classes()) {
    throw ContractError("expected " + std::to_string(protocol.total_classes()) +
                        " final-session class tallies, got " +
                        std::to_string(final_tallies.size()));
  }
  m.final_base = tally_pct(final_tallies.first(protocol.base));
  m.final_new_avg = tally_pct(final_tallies.subspan(protocol.base));
  m.final_last_way = tally_pct(final_tallies.last(protocol.sessions > 0 ? protocol.way : 0));
  return m;
}

std::vector<ClassId> protocol_classes(const SessionProtocol& protocol, const FeatureBank& bank) {
  protocol.validate();
  if (bank.classes.size() < protocol.total_classes()) {
    throw ConfigError("bank has " + std::to_string(bank.classes.size()) +
                          " classes, protocol needs " + std::to_string(protocol.total_classes()),
                      "classes");
  }
  std::vector<ClassId> ids;
  ids.reserve(protocol.total_classes());
  for (std::size_t i = 0; i < protocol.total_classes(); ++i) ids.push_back(bank.classes[i].id);
  return ids;
}

SessionReport run_sessions(const SessionProtocol& protocol, const FeatureBank& bank,
                           const WeightBank& w0, const WeightGenerator& generator,
                           const RunOptions& options) {
  return run_sessions(protocol, bank, w0, generator, options, nullptr);
}

SessionReport run_sessions(const SessionProtocol& protocol, const FeatureBank& bank,
                           const WeightBank& w0, const WeightGenerator& generator,
                           const RunOptions& options, WeightBank* final_weights) {
  const std::vector<ClassId> ids = protocol_classes(protocol, bank);
  {
    const std::set<ClassId> want(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(protocol.base));
    const std::set<ClassId> have(w0.ids().begin(), w0.ids().end());
    if (want != have || w0.size() != protocol.base) {
      throw ConfigError("base weights cover " + std::to_string(w0.size()) +
                            " classes that do not match the protocol's " +
                            std::to_string(protocol.base) + " base classes",
                        "base_weights");
    }
  }
  if (w0.dim() != bank.dim) {
    throw ShapeError("base weights have width " + std::to_string(w0.dim()) + ", bank " +
                     std::to_string(bank.dim));
  }

  WeightBank weights = w0;
  Matrix protos = compute_prototypes(bank, weights.ids()).rows;

  SessionReport report;
  std::vector<ClassTally> tallies;
  for (std::size_t t = 0; t <= protocol.sessions; ++t) {
    if (t > 0) {
      const auto first = ids.begin() + static_cast<std::ptrdiff_t>(protocol.classes_seen(t - 1));
      const std::vector<ClassId> fresh(first, first + static_cast<std::ptrdiff_t>(protocol.way));
      for (ClassId id : fresh) {
        if (bank.at(id).train.rows() < protocol.shot) {
          throw ConfigError("class " + std::to_string(id) + " has fewer than " +
                                std::to_string(protocol.shot) + " train samples",
                            "shot");
        }
      }
      const Matrix p_new = compute_prototypes(bank, fresh, protocol.shot).rows;
      const Matrix generated = generator(protos, p_new, weights.rows());
      if (generated.rows() != protocol.way || generated.cols() != bank.dim) {
        throw ShapeError("generator returned " + generated.shape_str() + " for " +
                         std::to_string(protocol.way) + " new classes");
      }
      if (!num::all_finite(generated)) {
        throw NumericError("generator produced non-finite weights in session " +
                           std::to_string(t));
      }
      weights.append(fresh, generated, static_cast<int>(t));
      protos = num::concat_rows(protos, p_new);
    }

    const std::size_t seen = protocol.classes_seen(t);
    tallies.assign(seen, ClassTally{});
    std::size_t correct = 0;
    std::size_t total = 0;
    for (std::size_t c = 0; c < seen; ++c) {
      const Matrix& test = bank.at(ids[c]).test;
      const auto pred = classify(weights, test, options.cosine_head);
      tallies[c].id = ids[c];
      tallies[c].total = pred.size();
      tallies[c].correct =
          static_cast<std::size_t>(std::count(pred.begin(), pred.end(), ids[c]));
      correct += tallies[c].correct;
      total += tallies[c].total;
    }
    report.session_acc.push_back(
        round2(100.0 * static_cast<double>(correct) / static_cast<double>(total)));
    report.n_classes.push_back(seen);
  }
  report.metrics = compute_metrics(report.session_acc, tallies, protocol);
  if (final_weights != nullptr) *final_weights = std::move(weights);
  return report;
}

}  // namespace biag::harness
