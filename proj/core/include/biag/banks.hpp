#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "biag/num/matrix.hpp"

namespace biag {

using ClassId = std::uint32_t;

struct ClassRecord {
  ClassId id = 0;
  num::Matrix train;
  num::Matrix test;

  bool operator==(const ClassRecord&) const = default;
};

/// Labeled embeddings standing in for backbone outputs. Classes are kept in
/// ascending id order.
struct FeatureBank {
  std::size_t dim = 0;
  std::vector<ClassRecord> classes;
  std::string provenance;

  /// Throws on: width mismatch, duplicate ids, empty train/test split,
  /// non-finite values.
  void validate() const;
  const ClassRecord& at(ClassId id) const;
  std::optional<std::size_t> index_of(ClassId id) const;
  std::vector<ClassId> ids() const;

  bool operator==(const FeatureBank&) const = default;
};

/// Per-class mean features aligned to `ids`.
struct PrototypeBank {
  std::vector<ClassId> ids;
  num::Matrix rows;
};

/// Per-class classifier weight rows. Grows append-only across sessions.
class WeightBank {
 public:
  WeightBank() = default;
  WeightBank(std::vector<ClassId> ids, num::Matrix rows, int session = 0);

  const std::vector<ClassId>& ids() const noexcept { return ids_; }
  const num::Matrix& rows() const noexcept { return rows_; }
  const std::vector<int>& origin_session() const noexcept { return session_; }
  std::size_t size() const noexcept { return ids_.size(); }
  std::size_t dim() const noexcept { return rows_.cols(); }

  /// Appends rows for new classes; rejects ids already present.
  void append(std::span<const ClassId> ids, const num::Matrix& rows, int session);
  std::optional<std::size_t> index_of(ClassId id) const;

 private:
  std::vector<ClassId> ids_;
  num::Matrix rows_;
  std::vector<int> session_;
};

/// Per-class arithmetic mean of the train features of `ids` (in that order).
/// Throws LookupError for an unknown id.
PrototypeBank compute_prototypes(const FeatureBank& bank, std::span<const ClassId> ids);

/// Same, but only the first `shots` train samples of each class.
PrototypeBank compute_prototypes(const FeatureBank& bank, std::span<const ClassId> ids,
                                 std::size_t shots);

}  // namespace biag
