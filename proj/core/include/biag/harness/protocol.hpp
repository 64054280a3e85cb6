#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "biag/banks.hpp"
#include "biag/num/matrix.hpp"
#include "biag/train/training.hpp"

namespace biag::harness {

/// Base session plus T incremental N-way K-shot sessions.
struct SessionProtocol {
  std::size_t base = 60;
  std::size_t sessions = 8;
  std::size_t way = 5;
  std::size_t shot = 5;

  std::size_t total_classes() const noexcept { return base + sessions * way; }
  /// Classes evaluated after session t: base + t·N.
  std::size_t classes_seen(std::size_t t) const noexcept { return base + t * way; }
  void validate() const;

  static SessionProtocol cifar() { return {60, 8, 5, 5}; }
  static SessionProtocol mini_imagenet() { return {60, 8, 5, 5}; }
  static SessionProtocol cub() { return {100, 10, 10, 5}; }

  bool operator==(const SessionProtocol&) const = default;
};

SessionProtocol parse_protocol_preset(std::string_view name);

/// Predicted class id per feature row: argmax of ⟨w_k, x⟩, ties to the
/// lowest class id. With `cosine_head` both sides are L2-normalised first.
std::vector<ClassId> classify(const WeightBank& weights, const num::Matrix& features,
                              bool cosine_head = false);

/// (p_old, p_new, w_old) → generated weights, one row per new class.
using WeightGenerator = std::function<num::Matrix(const num::Matrix&, const num::Matrix&,
                                                  const num::Matrix&)>;

struct ClassTally {
  ClassId id = 0;
  std::size_t correct = 0;
  std::size_t total = 0;
};

struct SessionMetrics {
  double average = 0.0;
  double final_acc = 0.0;
  double final_base = 0.0;
  double final_new_avg = 0.0;
  double final_last_way = 0.0;

  bool operator==(const SessionMetrics&) const = default;
};

struct SessionReport {
  std::vector<double> session_acc;        ///< percent, two decimals
  std::vector<std::size_t> n_classes;     ///< evaluated classes per session
  SessionMetrics metrics;
  train::LossTrace lg;
  train::LossTrace lcls;
  std::string config_echo;                ///< JSON text of the producing config

  bool operator==(const SessionReport&) const = default;
};

/// Rounds a percentage to two decimals.
double round2(double pct);

/// Arithmetic mean of per-session accuracies.
double average_accuracy(std::span<const double> per_session);

/// Improvement as tables print it: ours and baseline each rounded to two
/// decimals, then subtracted.
double improvement(double ours, double baseline);

/// Session-level metrics. `final_tallies` are the final session's per-class
/// counts in protocol class order (base classes first, then each session's
/// way). Throws ContractError on length mismatch.
SessionMetrics compute_metrics(std::span<const double> per_session_acc,
                               std::span<const ClassTally> final_tallies,
                               const SessionProtocol& protocol);

struct RunOptions {
  bool cosine_head = false;
};

/// Class ids in protocol order: the first `total_classes()` ids of `bank`.
std::vector<ClassId> protocol_classes(const SessionProtocol& protocol, const FeatureBank& bank);

/// Runs the base session and every incremental session. Base prototypes use
/// all train samples; session classes use their first K train samples.
/// Throws ConfigError if `w0` does not cover exactly the base classes or the
/// bank lacks protocol classes.
SessionReport run_sessions(const SessionProtocol& protocol, const FeatureBank& bank,
                           const WeightBank& w0, const WeightGenerator& generator,
                           const RunOptions& options = {});

/// Same, also returning the final weight bank.
SessionReport run_sessions(const SessionProtocol& protocol, const FeatureBank& bank,
                           const WeightBank& w0, const WeightGenerator& generator,
                           const RunOptions& options, WeightBank* final_weights);

}  // namespace biag::harness
