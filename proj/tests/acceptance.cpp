// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "app/commands.hpp"
#include "app/pipeline.hpp"
#include "app/run_config.hpp"
#include "biag/error.hpp"
#include "biag/gen/checkpoint.hpp"
#include "biag/gen/generator.hpp"
#include "biag/harness/bank_io.hpp"
#include "biag/harness/protocol.hpp"
#include "biag/harness/report.hpp"
#include "biag/io/binary.hpp"
#include "biag/num/gradcheck.hpp"
#include "biag/train/training.hpp"

namespace {

using biag::ClassId;
using biag::WeightBank;
using biag::app::RunConfig;
using biag::gen::BiagParams;
using biag::gen::ScmMode;
using biag::num::Matrix;
using biag::num::Rng;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// ---------------------------------------------------------------- 1
Outcome metrics_reproduction() {
  struct Row {
    const char* name;
    std::vector<double> acc;
    biag::harness::SessionProtocol proto;
    double average;
    double cec_final;
    double final_gain;
  };
  const std::vector<Row> rows{
      {"miniImageNet", {84.78, 80.14, 75.43, 71.48, 68.76, 65.81, 62.99, 61.20, 59.83},
       biag::harness::SessionProtocol::mini_imagenet(), 70.05, 47.63, 12.20},
      {"CUB-200", {82.97, 79.75, 76.56, 71.88, 70.72, 68.30, 68.55, 66.49, 64.63, 64.25, 63.72},
       biag::harness::SessionProtocol::cub(), 70.71, 52.28, 11.44},
      {"CIFAR-100", {84.00, 78.97, 74.73, 70.75, 67.36, 64.21, 62.21, 60.20, 57.95},
       biag::harness::SessionProtocol::cifar(), 68.93, 49.14, 8.81},
  };
  Outcome o{true, ""};
  for (const auto& r : rows) {
    const auto m = biag::harness::compute_metrics(r.acc, {}, r.proto);
    const double gain = biag::harness::improvement(m.final_acc, r.cec_final);
    const bool ok = std::abs(m.average - r.average) <= 0.005 && std::abs(gain - r.final_gain) <= 0.005;
    o.pass = o.pass && ok;
    o.detail += std::string(r.name) + " avg " + fmt("%.2f", m.average) + " gain " +
                fmt("%+.2f", gain) + "; ";
  }
  return o;
}

// ---------------------------------------------------------------- 2
BiagParams random_params(std::size_t dim, std::size_t way, std::size_t depth, ScmMode mode,
                         Rng& rng) {
  biag::gen::BiagShape shape;
  shape.dim = dim;
  shape.way = way;
  shape.num_layers = depth;
  shape.scm_mode = mode;
  BiagParams p = biag::gen::init_params(shape, rng);
  p.decoder = rng.normal_matrix(way, dim, 0.5);
  return p;
}

Outcome gradient_suite() {
  double worst = 0.0;
  std::size_t checks = 0;
  std::string failed;
  for (std::size_t depth = 1; depth <= 6; ++depth) {
    for (ScmMode mode : {ScmMode::kShared, ScmMode::kDirectional}) {
      for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(1000 * depth + 100 * static_cast<std::uint64_t>(mode) + seed);
        const BiagParams p = random_params(8, 4, depth, mode, rng);
        const Matrix p_old = rng.normal_matrix(5, 8);
        const Matrix w_old = rng.normal_matrix(5, 8);
        const Matrix p_new = rng.normal_matrix(4, 8);
        const Matrix w_new = rng.normal_matrix(4, 8);
        std::vector<biag::num::NamedMatrix> named;
        for (const auto& t : p.tensors()) named.push_back({t.name, *t.value});
        const auto report = biag::num::check_gradients(
            [&](biag::num::Tape& tape, std::span<const biag::num::Var> leaves) {
              return biag::train::episode_loss(tape, biag::gen::bind(p, leaves), p_old, p_new,
                                               w_old, w_new, biag::train::LossMode::kRowMean, {});
            },
            named);
        checks += report.entries.size();
        worst = std::max(worst, report.worst_error());
        for (const auto& e : report.entries) {
          if (!e.passed) failed += e.name + "@d" + std::to_string(depth) + " ";
        }

        biag::num::Tape tape;
        const auto vars = biag::gen::bind(tape, p);
        const auto res = biag::gen::generate(tape, vars, tape.leaf(p_old), tape.leaf(p_new),
                                             tape.leaf(w_old));
        tape.backward(biag::train::analogical_loss(res.weights, tape.leaf(w_new),
                                                   biag::train::LossMode::kRowMean));
        const auto numeric = biag::num::finite_diff_grad(
            [&](std::span<const Matrix> x) {
              return biag::train::analogical_loss(biag::gen::biag_generate(p, p_old, x[0], w_old),
                                                  w_new, biag::train::LossMode::kRowMean);
            },
            {p_new}, 1e-5);
        const double e = biag::num::gradient_relative_error(tape.grad(res.query_leaf), numeric[0]);
        ++checks;
        worst = std::max(worst, e);
        if (!(e < 1e-4)) failed += "q_L@d" + std::to_string(depth) + " ";
      }
    }
  }
  return {failed.empty() && worst < 1e-4,
          std::to_string(checks) + " tensor checks over depths 1-6, both modes, 10 seeds; worst " +
              fmt("%.2e", worst) + (failed.empty() ? "" : "; failed " + failed)};
}

// ---------------------------------------------------------------- 3
Outcome structural_invariants() {
  double row_sum_err = 0.0;
  double hull_violation = 0.0;
  double equiv = 0.0;
  double inv = 0.0;
  bool collapse = true;
  for (std::size_t depth = 1; depth <= 6; ++depth) {
    for (ScmMode mode : {ScmMode::kShared, ScmMode::kDirectional}) {
      Rng rng(50 + depth * 2 + static_cast<std::uint64_t>(mode));
      BiagParams p = random_params(8, 4, depth, mode, rng);

      // attention weights are attention(q, k, I)
      const Matrix q = rng.normal_matrix(4, 16, 3.0);
      const Matrix k = rng.normal_matrix(9, 16, 3.0);
      const Matrix a = biag::num::scaled_dot_attention(q, k, Matrix::identity(9), 4.0);
      for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (double v : a.row(i)) s += v;
        row_sum_err = std::max(row_sum_err, std::abs(s - 1.0));
      }

      // hull: barycentric coordinates of each generated row (4 old rows in 8 dims)
      const Matrix p_old4 = rng.normal_matrix(4, 8);
      const Matrix w_old4 = rng.normal_matrix(4, 8);
      const Matrix g = biag::gen::biag_generate(p, p_old4, rng.normal_matrix(4, 8), w_old4);
      Eigen::MatrixXd sys(9, 4);
      for (Eigen::Index r = 0; r < 4; ++r) {
        for (Eigen::Index j = 0; j < 8; ++j) sys(j, r) = w_old4(r, j);
        sys(8, r) = 1.0;
      }
      for (std::size_t i = 0; i < g.rows(); ++i) {
        Eigen::VectorXd rhs(9);
        for (Eigen::Index j = 0; j < 8; ++j) rhs(j) = g(i, j);
        rhs(8) = 1.0;
        const Eigen::VectorXd lambda = sys.colPivHouseholderQr().solve(rhs);
        hull_violation = std::max(hull_violation, (sys * lambda - rhs).norm());
        hull_violation = std::max(hull_violation, -lambda.minCoeff());
      }

      // permutations, with a shared decoder row so relabelling new classes is meaningful
      const Matrix row = rng.normal_matrix(1, 8);
      for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 8; ++j) p.decoder(i, j) = row(0, j);
      const Matrix p_old = rng.normal_matrix(7, 8);
      const Matrix w_old = rng.normal_matrix(7, 8);
      const Matrix p_new = rng.normal_matrix(4, 8);
      const Matrix base = biag::gen::biag_generate(p, p_old, p_new, w_old);
      const std::vector<std::size_t> np{3, 1, 0, 2};
      equiv = std::max(equiv, biag::num::max_abs_diff(
                                  biag::gen::biag_generate(p, p_old, biag::num::select_rows(p_new, np), w_old),
                                  biag::num::select_rows(base, np)));
      const std::vector<std::size_t> op{6, 2, 4, 0, 1, 5, 3};
      inv = std::max(inv, biag::num::max_abs_diff(
                              biag::gen::biag_generate(p, biag::num::select_rows(p_old, op), p_new,
                                                       biag::num::select_rows(w_old, op)),
                              base));

      const Matrix w1 = rng.normal_matrix(1, 8);
      const Matrix c = biag::gen::biag_generate(p, rng.normal_matrix(1, 8), p_new, w1);
      for (std::size_t i = 0; i < c.rows(); ++i)
        for (std::size_t j = 0; j < 8; ++j) collapse = collapse && c(i, j) == w1(0, j);
    }
  }
  const bool ok = row_sum_err <= 1e-9 && hull_violation <= 1e-9 && equiv <= 1e-12 &&
                  inv <= 1e-12 && collapse;
  return {ok, "row-sum err " + fmt("%.1e", row_sum_err) + ", hull violation " +
                  fmt("%.1e", hull_violation) + ", equivariance " + fmt("%.1e", equiv) +
                  ", invariance " + fmt("%.1e", inv) + ", single-old collapse " +
                  (collapse ? "exact" : "broken") + " (depths 1-6, both modes)"};
}

// ---------------------------------------------------------------- 4
std::pair<bool, double> oracle_run(RunConfig cfg) {
  const auto sb = biag::app::make_bank(cfg);
  Rng unused(0);
  const WeightBank w0 = biag::app::base_weights(cfg, sb.bank, sb.truth, unused, nullptr);
  const auto r = biag::app::evaluate(cfg, sb.bank, w0, biag::app::oracle_generator(*sb.truth),
                                     {}, {});
  const double lo = *std::min_element(r.session_acc.begin(), r.session_acc.end());
  return {lo == 100.0 && r.session_acc.size() == 9, lo};
}

Outcome oracle_ceiling() {
  RunConfig etf;
  etf.noise_sigma = 0.0;
  etf.geometry = "etf";
  etf.cosine_head = false;
  std::string note;
  try {
    etf.validate();
  } catch (const biag::ConfigError& e) {
    note = "ETF at D=64 rejected (" + e.field() + ": 100 classes need D >= 99); ";
  }
  etf.dim = 99;
  const auto [etf_ok, etf_lo] = oracle_run(etf);
  RunConfig ref;
  ref.noise_sigma = 0.0;
  const auto [ref_ok, ref_lo] = oracle_run(ref);
  return {etf_ok && ref_ok, note + "ETF D=99 min session acc " + fmt("%.2f", etf_lo) +
                                ", reference geometry D=64 min " + fmt("%.2f", ref_lo)};
}

// ---------------------------------------------------------------- 5
struct TrainabilityRun {
  bool loss_ok = false;
  bool cosine_ok = false;
  bool acc_ok = false;
  double first = 0.0;
  double last = 0.0;
  double cosine = 0.0;
  double cosine_min = 0.0;
  double average = 0.0;
  double oracle = 0.0;
};

TrainabilityRun trainability_run(std::uint64_t seed) {
  RunConfig cfg;
  cfg.data_seed = seed;
  cfg.train_seed = seed;
  const auto sb = biag::app::make_bank(cfg);
  const auto ex = biag::app::run_experiment(cfg, sb.bank, sb.truth);
  TrainabilityRun r;
  r.first = ex.biag_trace.mean_lg.front();
  r.last = ex.biag_trace.mean_lg.back();
  r.loss_ok = r.last < 0.1 && r.last < 0.25 * r.first;
  Rng episodes(seed + 7919);
  const auto cos = biag::app::pseudo_episode_cosine(ex.params, cfg.generator_options(), sb,
                                                    cfg.base, cfg.way, 100, episodes);
  r.cosine = cos.mean;
  r.cosine_min = cos.min;
  r.cosine_ok = cos.mean >= 0.95;
  const auto oracle = biag::app::evaluate(cfg, sb.bank, ex.w0,
                                          biag::app::oracle_generator(*sb.truth), {}, {});
  r.average = ex.report.metrics.average;
  r.oracle = oracle.metrics.average;
  r.acc_ok = r.average >= 90.0 && r.average >= r.oracle - 5.0;
  return r;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

// Seeds 0, 1 and 2, each metric taken as the median over the three runs.
Outcome trainability() {
  std::vector<double> last;
  std::vector<double> ratio;
  std::vector<double> cosine;
  std::vector<double> average;
  std::vector<double> gap;
  std::string detail;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto r = trainability_run(seed);
    last.push_back(r.last);
    ratio.push_back(r.last / r.first);
    cosine.push_back(r.cosine);
    average.push_back(r.average);
    gap.push_back(r.oracle - r.average);
    detail += "seed " + std::to_string(seed) + " L_G " + fmt("%.3f", r.first) + "->" +
              fmt("%.4f", r.last) + ", cos " + fmt("%.4f", r.cosine) + " (min " +
              fmt("%.3f", r.cosine_min) + "), avg " + fmt("%.2f", r.average) + " vs oracle " +
              fmt("%.2f", r.oracle) + "; ";
  }
  const bool ok = median(last) < 0.1 && median(ratio) < 0.25 && median(cosine) >= 0.95 &&
                  median(average) >= 90.0 && median(gap) <= 5.0;
  return {ok, detail + "medians: L_G " + fmt("%.4f", median(last)) + ", cos " +
                  fmt("%.4f", median(cosine)) + ", avg " + fmt("%.2f", median(average)) +
                  ", gap " + fmt("%.2f", median(gap))};
}

// ---------------------------------------------------------------- 6
Outcome protocol_fidelity() {
  std::string detail;
  bool ok = true;
  for (const char* preset : {"cifar", "cub"}) {
    RunConfig cfg;
    const auto proto = biag::harness::parse_protocol_preset(preset);
    cfg.base = proto.base;
    cfg.sessions = proto.sessions;
    cfg.way = proto.way;
    cfg.shot = proto.shot;
    cfg.epochs = 0;
    const auto sb = biag::app::make_bank(cfg);
    Rng unused(0);
    const WeightBank w0 = biag::app::base_weights(cfg, sb.bank, sb.truth, unused, nullptr);
    const auto r = biag::app::evaluate(cfg, sb.bank, w0, biag::app::oracle_generator(*sb.truth),
                                       {}, {});
    std::vector<std::size_t> expected;
    for (std::size_t t = 0; t <= proto.sessions; ++t) expected.push_back(proto.base + t * proto.way);
    ok = ok && r.n_classes == expected;
    detail += std::string(preset) + " " + std::to_string(r.n_classes.front()) + "->" +
              std::to_string(r.n_classes.back()) + " in " + std::to_string(r.n_classes.size()) +
              " sessions; ";
  }
  return {ok, detail};
}

// ---------------------------------------------------------------- 7
Outcome determinism_persistence() {
  namespace fs = std::filesystem;
  RunConfig cfg;
  cfg.epochs = 3;
  cfg.base_weights = "trained";
  cfg.base_epochs = 3;
  cfg.data_seed = 11;
  cfg.train_seed = 12;
  const auto sb1 = biag::app::make_bank(cfg);
  const auto sb2 = biag::app::make_bank(cfg);
  const auto a = biag::app::run_experiment(cfg, sb1.bank, sb1.truth);
  const auto b = biag::app::run_experiment(cfg, sb2.bank, sb2.truth);
  const bool reports = biag::harness::report_json(a.report) == biag::harness::report_json(b.report) &&
                       biag::harness::sessions_csv(a.report) == biag::harness::sessions_csv(b.report);
  const bool reparse = biag::harness::parse_report_json(biag::harness::report_json(a.report)) == a.report;

  const auto bank_bytes = biag::harness::encode_bank(sb1.bank);
  auto decoded = biag::harness::decode_bank(bank_bytes);
  decoded.provenance = sb1.bank.provenance;
  const bool bank_rt = decoded == sb1.bank && biag::harness::encode_bank(decoded) == bank_bytes;
  const auto ckpt = biag::gen::encode_checkpoint(a.params);
  const bool ckpt_rt = biag::gen::decode_checkpoint(ckpt) == a.params &&
                       biag::gen::encode_checkpoint(biag::gen::decode_checkpoint(ckpt)) == ckpt;

  const fs::path dir = fs::temp_directory_path() / "biag_acceptance_atomic";
  fs::remove_all(dir);
  fs::create_directories(dir);
  biag::io::atomic_write_file(dir / "bank.fvb", bank_bytes);
  biag::gen::save_checkpoint(a.params, dir / "gen.biag");
  bool atomic = true;
  for (const auto& [name, bytes] :
       {std::pair{std::string("bank.fvb"), biag::harness::encode_bank(sb1.bank)},
        std::pair{std::string("gen.biag"), biag::gen::encode_checkpoint(b.params)}}) {
    const auto before = biag::io::read_file(dir / name);
    try {
      biag::io::atomic_write_file(dir / name, std::vector<char>(bytes.size(), 'x'),
                                  static_cast<std::ptrdiff_t>(bytes.size() / 2));
      atomic = false;
    } catch (const biag::IoError&) {
    }
    atomic = atomic && biag::io::read_file(dir / name) == before;
  }
  try {
    biag::io::atomic_write_file(dir / "fresh.biag", ckpt, 7);
    atomic = false;
  } catch (const biag::IoError&) {
  }
  atomic = atomic && !fs::exists(dir / "fresh.biag");
  fs::remove_all(dir);

  const bool ok = reports && reparse && bank_rt && ckpt_rt && atomic;
  return {ok, std::string("reports ") + (reports ? "byte-identical" : "differ") + ", json re-parse " +
                  (reparse ? "equal" : "differs") + ", FVB1 " + (bank_rt ? "bit-exact" : "differs") +
                  ", checkpoint " + (ckpt_rt ? "bit-exact" : "differs") + ", interrupted writes " +
                  (atomic ? "leave targets intact" : "corrupt targets")};
}

// ---------------------------------------------------------------- 8
Outcome ablation_harness() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "biag_acceptance_ablate";
  fs::remove_all(dir);
  RunConfig cfg;
  cfg.out = dir.string();
  std::ostringstream log;
  const int code = biag::app::guarded([&] { return biag::app::cmd_ablate(cfg, {}, log); }, log);
  std::size_t emitted = 0;
  for (const auto& name : biag::app::ablation_variants()) {
    emitted += fs::exists(dir / name / "report.json") ? 1 : 0;
  }
  const bool table = fs::exists(dir / "ablation.md");
  fs::remove_all(dir);

  std::vector<double> full;
  std::vector<double> linear;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    RunConfig c;
    c.data_seed = seed;
    c.train_seed = seed;
    const auto sb = biag::app::make_bank(c);
    for (const char* name : {"full", "scm_linear"}) {
      const RunConfig v = biag::app::with_variant(c, name);
      biag::num::Rng rng(v.train_seed);
      const WeightBank w0 = biag::app::base_weights(v, sb.bank, sb.truth, rng, nullptr);
      const auto fit = biag::train::train_biag(biag::gen::init_params(v.shape(), rng), sb.bank,
                                               w0, v.biag_training(), v.generator_options(), rng);
      (std::string(name) == "full" ? full : linear).push_back(fit.trace.mean_lg.back());
    }
  }
  const double mf = median(full);
  const double ml = median(linear);
  std::string per_seed;
  for (std::size_t i = 0; i < full.size(); ++i) {
    per_seed += " " + fmt("%.4f", full[i]) + "/" + fmt("%.4f", linear[i]);
  }
  const bool ok = code == 0 && emitted == 6 && table && mf < ml;
  return {ok, std::to_string(emitted) + "/6 variant reports" + (table ? " + table" : "") +
                  "; median final L_G full " + fmt("%.4f", mf) + " vs scm_linear " +
                  fmt("%.4f", ml) + " (per seed full/linear:" + per_seed + ")"};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"metrics reproduction", metrics_reproduction},
      {"gradient suite", gradient_suite},
      {"structural invariants", structural_invariants},
      {"oracle ceiling", oracle_ceiling},
      {"end-to-end trainability", trainability},
      {"protocol fidelity", protocol_fidelity},
      {"determinism and persistence", determinism_persistence},
      {"ablation harness", ablation_harness},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%zu] %s %s (%.1fs): %s\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first,
                secs, o.detail.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
