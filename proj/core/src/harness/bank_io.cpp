#include "biag/harness/bank_io.hpp"

#include <algorithm>
#include <set>

#include "biag/error.hpp"
#include "biag/io/binary.hpp"

namespace biag::harness {

using num::Matrix;

namespace {

void expect_magic(io::ByteReader& r, std::string_view magic, std::string_view what) {
  if (r.bytes(4, "magic") != magic) {
    throw FormatError("not a " + std::string(what) + " file (bad magic)", 0);
  }
}

void expect_version(io::ByteReader& r, std::uint16_t want) {
  const std::size_t at = r.offset();
  const std::uint16_t v = r.u16("version");
  if (v != want) throw FormatError("unsupported version " + std::to_string(v), at);
}

}  // namespace

std::vector<char> encode_bank(const FeatureBank& bank) {
  bank.validate();
  io::ByteWriter w;
  w.bytes("FVB1");
  w.u16(kBankVersion);
  w.u32(static_cast<std::uint32_t>(bank.dim));
  w.u32(static_cast<std::uint32_t>(bank.classes.size()));
  for (const auto& c : bank.classes) {
    w.u32(c.id);
    w.u32(static_cast<std::uint32_t>(c.train.rows()));
    w.u32(static_cast<std::uint32_t>(c.test.rows()));
    w.f64_span(c.train.data());
    w.f64_span(c.test.data());
  }
  return w.take();
}

FeatureBank decode_bank(std::span<const char> bytes) {
  io::ByteReader r(bytes);
  expect_magic(r, "FVB1", "feature bank");
  expect_version(r, kBankVersion);
  FeatureBank bank;
  bank.dim = r.u32("dimension");
  const std::uint32_t n = r.u32("class count");
  std::set<ClassId> seen;
  for (std::uint32_t i = 0; i < n; ++i) {
    ClassRecord rec;
    rec.id = r.u32("class id");
    if (!seen.insert(rec.id).second) {
      throw ConfigError("feature bank: duplicate class id " + std::to_string(rec.id), "class_id");
    }
    const std::uint32_t n_train = r.u32("train count");
    const std::uint32_t n_test = r.u32("test count");
    rec.train = r.matrix_payload(n_train, bank.dim, "train features");
    rec.test = r.matrix_payload(n_test, bank.dim, "test features");
    bank.classes.push_back(std::move(rec));
  }
  if (!r.at_end()) {
    throw FormatError(std::to_string(r.remaining()) + " trailing bytes after last class",
                      r.offset());
  }
  std::sort(bank.classes.begin(), bank.classes.end(),
            [](const ClassRecord& a, const ClassRecord& b) { return a.id < b.id; });
  bank.validate();
  return bank;
}

void write_bank(const FeatureBank& bank, const std::filesystem::path& path) {
  io::atomic_write_file(path, encode_bank(bank));
}

FeatureBank read_bank(const std::filesystem::path& path) {
  FeatureBank bank = decode_bank(io::read_file(path));
  bank.provenance = "import:" + path.string();
  return bank;
}

std::vector<char> encode_affine(const nc::AffineMap& map) {
  io::ByteWriter w;
  w.bytes("AFM1");
  w.u16(1);
  w.matrix(map.linear);
  w.matrix(map.offset);
  return w.take();
}

nc::AffineMap decode_affine(std::span<const char> bytes) {
  io::ByteReader r(bytes);
  expect_magic(r, "AFM1", "affine map");
  expect_version(r, 1);
  nc::AffineMap map;
  map.linear = r.matrix("linear part");
  const std::size_t at = r.offset();
  map.offset = r.matrix("offset");
  if (map.linear.rows() != map.linear.cols() || map.offset.rows() != 1 ||
      map.offset.cols() != map.linear.rows()) {
    throw FormatError("affine map shapes " + map.linear.shape_str() + " and " +
                          map.offset.shape_str() + " are inconsistent",
                      at);
  }
  if (!r.at_end()) throw FormatError("trailing bytes after affine map", r.offset());
  return map;
}

void write_affine(const nc::AffineMap& map, const std::filesystem::path& path) {
  io::atomic_write_file(path, encode_affine(map));
}

nc::AffineMap read_affine(const std::filesystem::path& path) {
  return decode_affine(io::read_file(path));
}

std::vector<char> encode_weights(const WeightBank& weights) {
  io::ByteWriter w;
  w.bytes("WTB1");
  w.u16(1);
  w.u32(static_cast<std::uint32_t>(weights.size()));
  for (ClassId id : weights.ids()) w.u32(id);
  for (int s : weights.origin_session()) w.u32(static_cast<std::uint32_t>(s));
  w.matrix(weights.rows());
  return w.take();
}

WeightBank decode_weights(std::span<const char> bytes) {
  io::ByteReader r(bytes);
  expect_magic(r, "WTB1", "weight bank");
  expect_version(r, 1);
  const std::uint32_t n = r.u32("class count");
  std::vector<ClassId> ids(n);
  std::vector<int> sessions(n);
  for (auto& id : ids) id = r.u32("class id");
  for (auto& s : sessions) s = static_cast<int>(r.u32("origin session"));
  const std::size_t at = r.offset();
  const Matrix rows = r.matrix("weights");
  if (rows.rows() != n) {
    throw FormatError("weight matrix has " + std::to_string(rows.rows()) + " rows for " +
                          std::to_string(n) + " ids",
                      at);
  }
  if (!r.at_end()) throw FormatError("trailing bytes after weight bank", r.offset());
  if (!num::all_finite(rows)) throw NumericError("weight bank contains non-finite values");

  WeightBank out;
  std::size_t start = 0;
  while (start < n) {
    std::size_t stop = start;
    while (stop < n && sessions[stop] == sessions[start]) ++stop;
    std::vector<std::size_t> idx(stop - start);
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = start + i;
    out.append(std::span<const ClassId>(ids.data() + start, stop - start),
               num::select_rows(rows, idx), sessions[start]);
    start = stop;
  }
  return out;
}

void write_weights(const WeightBank& weights, const std::filesystem::path& path) {
  io::atomic_write_file(path, encode_weights(weights));
}

WeightBank read_weights(const std::filesystem::path& path) {
  return decode_weights(io::read_file(path));
}

}  // namespace biag::harness
