#include "biag/harness/synth.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "biag/error.hpp"

namespace biag::harness {

using num::Matrix;

std::string_view to_string(Geometry g) {
  return g == Geometry::kEtf ? "etf" : "random_directions";
}

std::string_view to_string(LinkRotation r) {
  return r == LinkRotation::kIdentity ? "identity" : "random";
}

Geometry parse_geometry(std::string_view s) {
  if (s == "etf") return Geometry::kEtf;
  if (s == "random_directions") return Geometry::kRandomDirections;
  throw ConfigError("unknown geometry '" + std::string(s) + "'", "geometry");
}

LinkRotation parse_link_rotation(std::string_view s) {
  if (s == "identity") return LinkRotation::kIdentity;
  if (s == "random") return LinkRotation::kRandom;
  throw ConfigError("unknown link rotation '" + std::string(s) + "'", "link_rotation");
}

void SynthConfig::validate(std::size_t total_classes) const {
  if (dim == 0) throw ConfigError("dimension must be positive", "dim");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    throw ConfigError("noise_sigma must be finite and non-negative", "noise_sigma");
  }
  if (n_train == 0) throw ConfigError("need at least one train sample per class", "n_train");
  if (n_test == 0) throw ConfigError("need at least one test sample per class", "n_test");
  if (!(mean_norm > 0.0) || !std::isfinite(mean_norm)) {
    throw ConfigError("mean_norm must be positive", "mean_norm");
  }
  if (!(link_scale >= 0.0) || !std::isfinite(link_scale)) {
    throw ConfigError("link_scale must be finite and non-negative", "link_scale");
  }
  if (geometry == Geometry::kEtf) {
    if (total_classes < 2) throw ConfigError("an ETF needs at least two classes", "geometry");
    if (dim + 1 < total_classes) {
      throw ConfigError("an ETF of " + std::to_string(total_classes) + " classes needs dim >= " +
                            std::to_string(total_classes - 1) + ", got " + std::to_string(dim),
                        "dim");
    }
  } else if (subspace_rank > dim) {
    throw ConfigError("subspace_rank " + std::to_string(subspace_rank) + " exceeds dim " +
                          std::to_string(dim),
                      "subspace_rank");
  }
}

Matrix SynthBank::true_weights(std::span<const ClassId> ids) const {
  if (!truth) throw ConfigError("bank has no hidden affine link", "affine_link");
  std::vector<std::size_t> rows;
  rows.reserve(ids.size());
  for (ClassId id : ids) {
    auto idx = bank.index_of(id);
    if (!idx) throw LookupError("unknown class id " + std::to_string(id));
    rows.push_back(*idx);
  }
  return nc::affine_oracle_apply(*truth, num::select_rows(class_means, rows));
}

namespace {

std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Matrix random_directions(std::size_t k, std::size_t dim, std::size_t rank, double c,
                         num::Rng& rng) {
  const std::size_t r = rank == 0 ? dim : rank;
  const Matrix q = num::random_orthogonal(dim, rng);
  Matrix out(k, dim);
  std::vector<double> z(r);
  for (std::size_t i = 0; i < k; ++i) {
    double norm2 = 0.0;
    do {
      norm2 = 0.0;
      for (double& v : z) {
        v = rng.normal();
        norm2 += v * v;
      }
    } while (norm2 == 0.0);
    const double inv = c / std::sqrt(norm2);
    for (std::size_t j = 0; j < dim; ++j) {
      double acc = 0.0;
      for (std::size_t a = 0; a < r; ++a) acc += q(j, a) * z[a];
      out(i, j) = acc * inv;
    }
  }
  return out;
}

}  // namespace

SynthBank synth_bank(const SessionProtocol& protocol, const SynthConfig& config, num::Rng& rng) {
  protocol.validate();
  const std::size_t k = protocol.total_classes();
  config.validate(k);

  std::ostringstream desc;
  desc.precision(17);
  desc << "geometry=" << to_string(config.geometry) << ";dim=" << config.dim
       << ";classes=" << k << ";sigma=" << config.noise_sigma << ";n_train=" << config.n_train
       << ";n_test=" << config.n_test << ";norm=" << config.mean_norm
       << ";rank=" << config.subspace_rank << ";center=" << config.center_means << ";link=" << config.affine_link
       << ";scale=" << config.link_scale << ";rotation=" << to_string(config.link_rotation)
       << ";seed=" << rng.seed();

  SynthBank out;
  out.class_means = config.geometry == Geometry::kEtf
                        ? nc::simplex_etf(k, config.dim, config.mean_norm, rng).vectors
                        : random_directions(k, config.dim, config.subspace_rank,
                                            config.mean_norm, rng);
  if (config.geometry == Geometry::kRandomDirections && config.center_means) {
    const Matrix mu_g = num::column_mean(out.class_means);
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < config.dim; ++j) out.class_means(i, j) -= mu_g(0, j);
    }
  }

  out.bank.dim = config.dim;
  out.bank.provenance = "synthetic:" + fnv1a_hex(desc.str());
  out.bank.classes.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    ClassRecord& rec = out.bank.classes[c];
    rec.id = static_cast<ClassId>(c);
    auto draw = [&](std::size_t n) {
      Matrix m(n, config.dim);
      for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t j = 0; j < config.dim; ++j) {
          const double noise = config.noise_sigma > 0.0 ? rng.normal(0.0, config.noise_sigma) : 0.0;
          m(s, j) = out.class_means(c, j) + noise;
        }
      }
      return m;
    };
    rec.train = draw(config.n_train);
    rec.test = draw(config.n_test);
  }

  if (config.affine_link) {
    const double s = config.link_scale > 0.0 ? config.link_scale : rng.uniform(0.5, 2.0);
    const Matrix rotation = config.link_rotation == LinkRotation::kIdentity
                                ? Matrix::identity(config.dim)
                                : num::random_orthogonal(config.dim, rng);
    out.truth = nc::AffineMap::from_similarity(s, rotation, num::column_mean(out.class_means));
  }
  out.bank.validate();
  return out;
}

}  // namespace biag::harness
