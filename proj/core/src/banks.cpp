#include "biag/banks.hpp"

#include <algorithm>
#include <set>

#include "biag/error.hpp"

namespace biag {

void FeatureBank::validate() const {
  if (dim == 0) throw ConfigError("feature bank: dimension must be positive", "dim");
  std::set<ClassId> seen;
  for (const auto& c : classes) {
    if (!seen.insert(c.id).second) {
      throw ConfigError("feature bank: duplicate class id " + std::to_string(c.id), "class_id");
    }
    if (c.train.rows() == 0 || c.test.rows() == 0) {
      throw DegenerateInputError("feature bank: class " + std::to_string(c.id) +
                                 " needs at least one train and one test sample");
    }
    if (c.train.cols() != dim || c.test.cols() != dim) {
      throw ShapeError("feature bank: class " + std::to_string(c.id) + " has width " +
                       std::to_string(c.train.cols()) + "/" + std::to_string(c.test.cols()) +
                       ", expected " + std::to_string(dim));
    }
    if (!num::all_finite(c.train) || !num::all_finite(c.test)) {
      throw NumericError("feature bank: class " + std::to_string(c.id) +
                         " contains non-finite values");
    }
  }
  if (!std::is_sorted(classes.begin(), classes.end(),
                      [](const auto& a, const auto& b) { return a.id < b.id; })) {
    throw ConfigError("feature bank: classes must be in ascending id order", "class_id");
  }
}

std::optional<std::size_t> FeatureBank::index_of(ClassId id) const {
  auto it = std::lower_bound(classes.begin(), classes.end(), id,
                             [](const ClassRecord& c, ClassId v) { return c.id < v; });
  if (it == classes.end() || it->id != id) return std::nullopt;
  return static_cast<std::size_t>(it - classes.begin());
}

const ClassRecord& FeatureBank::at(ClassId id) const {
  auto idx = index_of(id);
  if (!idx) throw LookupError("feature bank: unknown class id " + std::to_string(id));
  return classes[*idx];
}

std::vector<ClassId> FeatureBank::ids() const {
  std::vector<ClassId> out;
  out.reserve(classes.size());
  for (const auto& c : classes) out.push_back(c.id);
  return out;
}

WeightBank::WeightBank(std::vector<ClassId> ids, num::Matrix rows, int session)
    : ids_(std::move(ids)), rows_(std::move(rows)), session_(ids_.size(), session) {
  if (ids_.size() != rows_.rows()) {
    throw ShapeError("weight bank: " + std::to_string(ids_.size()) + " ids for " +
                     std::to_string(rows_.rows()) + " rows");
  }
  std::set<ClassId> seen(ids_.begin(), ids_.end());
  if (seen.size() != ids_.size()) throw ConfigError("weight bank: duplicate class ids", "class_id");
}

void WeightBank::append(std::span<const ClassId> ids, const num::Matrix& rows, int session) {
  if (ids.size() != rows.rows()) {
    throw ShapeError("weight bank append: " + std::to_string(ids.size()) + " ids for " +
                     std::to_string(rows.rows()) + " rows");
  }
  if (!rows_.empty() && rows.cols() != rows_.cols()) {
    throw ShapeError("weight bank append: width " + std::to_string(rows.cols()) +
                     " does not match " + std::to_string(rows_.cols()));
  }
  for (ClassId id : ids) {
    if (index_of(id)) {
      throw ConfigError("weight bank append: class " + std::to_string(id) + " already present",
                        "class_id");
    }
  }
  rows_ = num::concat_rows(rows_, rows);
  ids_.insert(ids_.end(), ids.begin(), ids.end());
  session_.insert(session_.end(), ids.size(), session);
}

std::optional<std::size_t> WeightBank::index_of(ClassId id) const {
  auto it = std::find(ids_.begin(), ids_.end(), id);
  if (it == ids_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - ids_.begin());
}

PrototypeBank compute_prototypes(const FeatureBank& bank, std::span<const ClassId> ids) {
  return compute_prototypes(bank, ids, 0);
}

PrototypeBank compute_prototypes(const FeatureBank& bank, std::span<const ClassId> ids,
                                 std::size_t shots) {
  PrototypeBank out;
  out.ids.assign(ids.begin(), ids.end());
  out.rows = num::Matrix(ids.size(), bank.dim);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const num::Matrix& train = bank.at(ids[i]).train;
    const std::size_t n = shots == 0 ? train.rows() : std::min(shots, train.rows());
    auto dst = out.rows.row(i);
    for (std::size_t s = 0; s < n; ++s) {
      auto x = train.row(s);
      for (std::size_t j = 0; j < bank.dim; ++j) dst[j] += x[j];
    }
    for (double& v : dst) v /= static_cast<double>(n);
  }
  return out;
}

}  // namespace biag
