#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numeric>

#include "biag/error.hpp"
#include "biag/harness/bank_io.hpp"
#include "biag/harness/protocol.hpp"
#include "biag/harness/report.hpp"
#include "biag/harness/synth.hpp"
#include "biag/io/binary.hpp"
#include "biag/nc/geometry.hpp"
#include "biag/num/rng.hpp"

namespace {

using biag::ClassId;
using biag::FeatureBank;
using biag::WeightBank;
using biag::harness::Geometry;
using biag::harness::SessionProtocol;
using biag::harness::SynthConfig;
using biag::num::Matrix;
using biag::num::Rng;

std::vector<ClassId> iota_ids(std::size_t n, ClassId from = 0) {
  std::vector<ClassId> ids(n);
  std::iota(ids.begin(), ids.end(), from);
  return ids;
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("biag_" + name);
  std::filesystem::create_directories(dir);
  return dir;
}

// Reported session rows and baseline averages for the three benchmarks.
const std::vector<double> kMiniBiag{84.78, 80.14, 75.43, 71.48, 68.76, 65.81, 62.99, 61.20, 59.83};
const std::vector<double> kCubBiag{82.97, 79.75, 76.56, 71.88, 70.72, 68.30,
                                   68.55, 66.49, 64.63, 64.25, 63.72};
const std::vector<double> kCifarBiag{84.00, 78.97, 74.73, 70.75, 67.36, 64.21, 62.21, 60.20, 57.95};

TEST(Metrics, MiniImageNetRow) {
  const auto m = biag::harness::compute_metrics(kMiniBiag, {}, SessionProtocol::mini_imagenet());
  EXPECT_NEAR(m.average, 70.05, 0.005);
  EXPECT_DOUBLE_EQ(m.final_acc, 59.83);
  EXPECT_NEAR(biag::harness::improvement(m.final_acc, 47.63), 12.20, 0.005);
  EXPECT_NEAR(biag::harness::improvement(m.average, 57.75), 12.30, 0.005);
}

TEST(Metrics, CubRow) {
  const auto m = biag::harness::compute_metrics(kCubBiag, {}, SessionProtocol::cub());
  EXPECT_NEAR(m.average, 70.71, 0.005);
  EXPECT_NEAR(biag::harness::improvement(m.final_acc, 52.28), 11.44, 0.005);
  EXPECT_NEAR(biag::harness::improvement(m.average, 61.33), 9.38, 0.005);
}

TEST(Metrics, CifarRow) {
  const auto m = biag::harness::compute_metrics(kCifarBiag, {}, SessionProtocol::cifar());
  EXPECT_NEAR(m.average, 68.93, 0.005);
  EXPECT_NEAR(biag::harness::improvement(m.final_acc, 49.14), 8.81, 0.005);
  EXPECT_NEAR(biag::harness::improvement(m.average, 59.53), 9.40, 0.005);
}

TEST(Metrics, ConstantVectorAndLengthMismatch) {
  const std::vector<double> flat(9, 50.0);
  const auto m = biag::harness::compute_metrics(flat, {}, SessionProtocol::cifar());
  EXPECT_DOUBLE_EQ(m.average, 50.0);
  EXPECT_DOUBLE_EQ(m.final_acc, 50.0);
  EXPECT_THROW(biag::harness::compute_metrics(std::vector<double>(8, 1.0), {},
                                              SessionProtocol::cifar()),
               biag::ContractError);
}

TEST(Metrics, FinalSessionBreakdownFromTallies) {
  const SessionProtocol proto{2, 2, 1, 1};
  std::vector<biag::harness::ClassTally> t{{0, 10, 10}, {1, 5, 10}, {2, 3, 10}, {3, 1, 10}};
  const std::vector<double> acc{100.0, 80.0, 47.5};
  const auto m = biag::harness::compute_metrics(acc, t, proto);
  EXPECT_DOUBLE_EQ(m.final_base, 75.0);
  EXPECT_DOUBLE_EQ(m.final_new_avg, 20.0);
  EXPECT_DOUBLE_EQ(m.final_last_way, 10.0);
}

TEST(Protocol, SessionClassCounts) {
  const auto cifar = SessionProtocol::cifar();
  for (std::size_t t = 0; t <= 8; ++t) EXPECT_EQ(cifar.classes_seen(t), 60 + 5 * t);
  EXPECT_EQ(cifar.total_classes(), 100u);
  const auto cub = SessionProtocol::cub();
  for (std::size_t t = 0; t <= 10; ++t) EXPECT_EQ(cub.classes_seen(t), 100 + 10 * t);
  EXPECT_EQ(cub.total_classes(), 200u);
  EXPECT_EQ(biag::harness::parse_protocol_preset("cub"), cub);
  EXPECT_THROW(biag::harness::parse_protocol_preset("imagenet"), biag::ConfigError);
}

TEST(Synth, NoiselessMeansAreRecoveredByNearestMean) {
  SynthConfig cfg;
  cfg.dim = 16;
  cfg.n_test = 100;
  cfg.geometry = Geometry::kEtf;
  Rng rng(1);
  const auto sb = biag::harness::synth_bank({10, 0, 5, 5}, cfg, rng);
  std::size_t correct = 0;
  std::size_t total = 0;
  for (const auto& c : sb.bank.classes) {
    for (std::size_t i = 0; i < c.test.rows(); ++i) {
      double best = 1e300;
      std::size_t arg = 0;
      for (std::size_t k = 0; k < sb.class_means.rows(); ++k) {
        double d = 0.0;
        for (std::size_t j = 0; j < 16; ++j) {
          const double e = c.test(i, j) - sb.class_means(k, j);
          d += e * e;
        }
        if (d < best) {
          best = d;
          arg = k;
        }
      }
      correct += arg == c.id;
      ++total;
    }
  }
  EXPECT_GT(100.0 * static_cast<double>(correct) / static_cast<double>(total), 99.9);
}

TEST(Synth, SameSeedGivesIdenticalBanks) {
  SynthConfig cfg;
  cfg.dim = 16;
  Rng a(2);
  Rng b(2);
  const auto x = biag::harness::synth_bank({10, 2, 5, 5}, cfg, a);
  const auto y = biag::harness::synth_bank({10, 2, 5, 5}, cfg, b);
  EXPECT_EQ(x.bank, y.bank);
  EXPECT_EQ(biag::harness::encode_bank(x.bank), biag::harness::encode_bank(y.bank));
}

TEST(Synth, ZeroNoiseSamplesSitOnMeans) {
  SynthConfig cfg;
  cfg.dim = 8;
  cfg.noise_sigma = 0.0;
  Rng rng(3);
  const auto sb = biag::harness::synth_bank({5, 0, 5, 5}, cfg, rng);
  for (const auto& c : sb.bank.classes)
    for (std::size_t i = 0; i < c.train.rows(); ++i)
      for (std::size_t j = 0; j < 8; ++j) EXPECT_EQ(c.train(i, j), sb.class_means(c.id, j));
}

TEST(Synth, InfeasibleEtfNamesField) {
  SynthConfig cfg;
  cfg.dim = 8;
  cfg.geometry = Geometry::kEtf;
  Rng rng(4);
  try {
    biag::harness::synth_bank({10, 0, 5, 5}, cfg, rng);
    FAIL();
  } catch (const biag::ConfigError& e) {
    EXPECT_EQ(e.field(), "dim");
  }
}

TEST(Prototypes, MeanOfTrainSamples) {
  FeatureBank bank;
  bank.dim = 2;
  bank.classes.push_back({7, Matrix::from_rows({{1, 2}, {3, 4}, {5, 9}}), Matrix(1, 2)});
  const std::vector<ClassId> ids{7};
  const auto all = biag::compute_prototypes(bank, ids);
  EXPECT_EQ(all.rows, Matrix::from_rows({{3, 5}}));
  const auto two = biag::compute_prototypes(bank, ids, 2);
  EXPECT_EQ(two.rows, Matrix::from_rows({{2, 3}}));
  const std::vector<ClassId> missing{8};
  EXPECT_THROW(biag::compute_prototypes(bank, missing), biag::LookupError);
}

TEST(Classify, MatchesBruteForceIncludingTies) {
  Rng rng(5);
  const WeightBank w(iota_ids(20, 100), rng.normal_matrix(20, 6));
  const Matrix x = rng.normal_matrix(50, 6);
  for (bool cosine : {false, true}) {
    const auto got = biag::harness::classify(w, x, cosine);
    for (std::size_t i = 0; i < 50; ++i) {
      double best = -1e300;
      ClassId arg = 0;
      for (std::size_t k = 0; k < 20; ++k) {
        double s = 0.0;
        double n = 0.0;
        for (std::size_t j = 0; j < 6; ++j) {
          s += w.rows()(k, j) * x(i, j);
          n += w.rows()(k, j) * w.rows()(k, j);
        }
        if (cosine) s /= std::sqrt(n);
        if (s > best) {
          best = s;
          arg = w.ids()[k];
        }
      }
      EXPECT_EQ(got[i], arg);
    }
  }
  // Duplicate rows tie: the lower id wins regardless of row order.
  const WeightBank tied({9, 4}, Matrix::from_rows({{1, 0}, {1, 0}}));
  EXPECT_EQ(biag::harness::classify(tied, Matrix::from_rows({{1, 1}}))[0], 4u);
}

struct OracleRun {
  biag::harness::SynthBank sb;
  SessionProtocol proto;
  WeightBank w0;
};

OracleRun oracle_setup(std::uint64_t seed, double sigma, Geometry geometry) {
  OracleRun r;
  r.proto = {10, 3, 2, 5};
  SynthConfig cfg;
  cfg.dim = 16;
  cfg.noise_sigma = sigma;
  cfg.geometry = geometry;
  Rng rng(seed);
  r.sb = biag::harness::synth_bank(r.proto, cfg, rng);
  const auto base = iota_ids(10);
  r.w0 = WeightBank(base, r.sb.true_weights(base));
  return r;
}

TEST(RunSessions, AffineOracleIsPerfectOnNoiselessBank) {
  for (Geometry g : {Geometry::kEtf, Geometry::kRandomDirections}) {
    const auto r = oracle_setup(6, 0.0, g);
    const auto truth = *r.sb.truth;
    auto oracle = [&](const Matrix&, const Matrix& p_new, const Matrix&) {
      return biag::nc::affine_oracle_apply(truth, p_new);
    };
    const auto report = biag::harness::run_sessions(r.proto, r.sb.bank, r.w0, oracle);
    ASSERT_EQ(report.session_acc.size(), 4u);
    for (double a : report.session_acc) EXPECT_DOUBLE_EQ(a, 100.0);
    EXPECT_EQ(report.n_classes, (std::vector<std::size_t>{10, 12, 14, 16}));
  }
}

TEST(RunSessions, ExistingRowsNeverChange) {
  const auto r = oracle_setup(7, 0.05, Geometry::kRandomDirections);
  std::vector<Matrix> seen;
  auto gen = [&](const Matrix&, const Matrix&, const Matrix& w_old) {
    seen.push_back(w_old);
    Rng local(seen.size());
    return local.normal_matrix(2, 16);
  };
  WeightBank final_w;
  biag::harness::run_sessions(r.proto, r.sb.bank, r.w0, gen, {}, &final_w);
  ASSERT_EQ(seen.size(), 3u);
  for (std::size_t s = 0; s < seen.size(); ++s) {
    for (std::size_t i = 0; i < 10; ++i)
      for (std::size_t j = 0; j < 16; ++j) EXPECT_EQ(seen[s](i, j), r.w0.rows()(i, j));
    if (s > 0) {
      for (std::size_t i = 0; i < seen[s - 1].rows(); ++i)
        for (std::size_t j = 0; j < 16; ++j) EXPECT_EQ(seen[s](i, j), seen[s - 1](i, j));
    }
  }
  EXPECT_EQ(final_w.size(), 16u);
  EXPECT_EQ(final_w.origin_session().back(), 3);
}

TEST(RunSessions, RejectsBadGeneratorOutput) {
  const auto r = oracle_setup(8, 0.05, Geometry::kRandomDirections);
  auto wrong_shape = [](const Matrix&, const Matrix&, const Matrix&) { return Matrix(3, 16); };
  EXPECT_THROW(biag::harness::run_sessions(r.proto, r.sb.bank, r.w0, wrong_shape),
               biag::ShapeError);
  auto nan = [](const Matrix&, const Matrix&, const Matrix&) {
    return Matrix(2, 16, std::nan(""));
  };
  EXPECT_THROW(biag::harness::run_sessions(r.proto, r.sb.bank, r.w0, nan), biag::NumericError);
}

TEST(BankFile, RoundTripIsBitExact) {
  SynthConfig cfg;
  cfg.dim = 8;
  Rng rng(9);
  const auto sb = biag::harness::synth_bank({6, 1, 2, 5}, cfg, rng);
  const auto bytes = biag::harness::encode_bank(sb.bank);
  EXPECT_EQ(std::string(bytes.data(), 4), "FVB1");
  FeatureBank back = biag::harness::decode_bank(bytes);
  back.provenance = sb.bank.provenance;
  EXPECT_EQ(back, sb.bank);

  const auto path = scratch_dir("bank") / "b.fvb";
  biag::harness::write_bank(sb.bank, path);
  EXPECT_EQ(biag::io::read_file(path), bytes);
  EXPECT_EQ(biag::harness::read_bank(path).classes, sb.bank.classes);
  std::filesystem::remove_all(path.parent_path());
}

TEST(BankFile, TruncationAndDuplicates) {
  FeatureBank bank;
  bank.dim = 2;
  bank.classes.push_back({3, Matrix::from_rows({{1, 2}}), Matrix::from_rows({{3, 4}})});
  bank.classes.push_back({5, Matrix::from_rows({{5, 6}}), Matrix::from_rows({{7, 8}})});
  const auto bytes = biag::harness::encode_bank(bank);
  for (std::size_t cut = 0; cut < bytes.size(); ++cut) {
    std::vector<char> part(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut));
    EXPECT_THROW(biag::harness::decode_bank(part), biag::FormatError) << "cut " << cut;
  }
  auto dup = bytes;
  // second class id sits after the header (14 bytes) and the first record
  const std::size_t second_id = 14 + 12 + 4 * 8;
  dup[second_id] = 3;
  try {
    biag::harness::decode_bank(dup);
    FAIL();
  } catch (const biag::ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find('3'), std::string::npos);
  }
}

TEST(BankFile, InterruptedWriteLeavesPreviousFile) {
  const auto path = scratch_dir("bank_atomic") / "b.fvb";
  FeatureBank bank;
  bank.dim = 1;
  bank.classes.push_back({0, Matrix::from_rows({{1}}), Matrix::from_rows({{2}})});
  biag::harness::write_bank(bank, path);
  const auto before = biag::io::read_file(path);
  FeatureBank other = bank;
  other.classes[0].train(0, 0) = 9.0;
  EXPECT_THROW(biag::io::atomic_write_file(path, biag::harness::encode_bank(other), 10),
               biag::IoError);
  EXPECT_EQ(biag::io::read_file(path), before);
  // the interrupted write only ever touched a sibling temp file
  for (const auto& e : std::filesystem::directory_iterator(path.parent_path())) {
    if (e.path() != path) {
      EXPECT_NE(e.path().filename().string().find(".tmp-"), std::string::npos);
      EXPECT_LT(e.file_size(), biag::harness::encode_bank(other).size());
    }
  }
  std::filesystem::remove_all(path.parent_path());
}

TEST(WeightsFile, RoundTripKeepsSessions) {
  Rng rng(10);
  WeightBank w(iota_ids(4), rng.normal_matrix(4, 3));
  w.append(std::vector<ClassId>{10, 11}, rng.normal_matrix(2, 3), 1);
  const auto back = biag::harness::decode_weights(biag::harness::encode_weights(w));
  EXPECT_EQ(back.ids(), w.ids());
  EXPECT_EQ(back.rows(), w.rows());
  EXPECT_EQ(back.origin_session(), w.origin_session());
}

TEST(AffineFile, RoundTrip) {
  Rng rng(11);
  biag::nc::AffineMap m;
  m.linear = rng.normal_matrix(3, 3);
  m.offset = rng.normal_matrix(1, 3);
  const auto back = biag::harness::decode_affine(biag::harness::encode_affine(m));
  EXPECT_EQ(back.linear, m.linear);
  EXPECT_EQ(back.offset, m.offset);
}

biag::harness::SessionReport sample_report() {
  biag::harness::SessionReport r;
  r.session_acc = {99.5, 97.25, 95.0};
  r.n_classes = {10, 12, 14};
  r.metrics = biag::harness::compute_metrics(r.session_acc, {}, {10, 2, 2, 5});
  r.lg.mean_lg = {0.9, 0.1 / 3.0};
  r.lcls.mean_lcls = {2.0, 0.5};
  r.config_echo = R"({"seed":3})";
  return r;
}

TEST(Report, JsonRoundTrip) {
  const auto r = sample_report();
  const auto json = biag::harness::report_json(r);
  EXPECT_EQ(biag::harness::parse_report_json(json), r);
  EXPECT_EQ(biag::harness::report_json(biag::harness::parse_report_json(json)), json);
  EXPECT_THROW(biag::harness::parse_report_json("{not json"), biag::FormatError);
}

TEST(Report, CsvAndMarkdown) {
  const auto r = sample_report();
  EXPECT_EQ(biag::harness::sessions_csv(r),
            "session,n_classes,acc\n0,10,99.50\n1,12,97.25\n2,14,95.00\n");
  const auto md = biag::harness::report_markdown(r, "demo");
  EXPECT_NE(md.find("97.25"), std::string::npos);
  EXPECT_NE(md.find("demo"), std::string::npos);
  const auto cmp = biag::harness::comparison_markdown({{"a", r}, {"b", r}});
  EXPECT_NE(cmp.find("| a"), std::string::npos);
}

}  // namespace
