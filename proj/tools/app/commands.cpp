#include "commands.hpp"

#include <algorithm>
#include <iomanip>

#include "biag/gen/checkpoint.hpp"
#include "biag/harness/bank_io.hpp"
#include "biag/harness/report.hpp"
#include "biag/io/binary.hpp"
#include "biag/num/gradcheck.hpp"
#include "pipeline.hpp"

namespace biag::app {

namespace fs = std::filesystem;
using num::Matrix;

namespace {

fs::path out_dir(const RunConfig& config) {
  fs::path dir(config.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

void write_config(const RunConfig& config, const fs::path& dir) {
  io::atomic_write_text(dir / "config.json", config_to_json(config, true));
}

std::string read_text(const fs::path& path) {
  const auto bytes = io::read_file(path);
  return std::string(bytes.begin(), bytes.end());
}

void write_reports(const harness::SessionReport& report, const fs::path& dir,
                   const std::string& title) {
  io::atomic_write_text(dir / "sessions.csv", harness::sessions_csv(report));
  io::atomic_write_text(dir / "report.json", harness::report_json(report));
  io::atomic_write_text(dir / "report.md", harness::report_markdown(report, title));
}

void write_traces(const train::LossTrace& biag, const train::LossTrace& base, const fs::path& dir) {
  io::atomic_write_text(dir / "loss_lg.csv", train::loss_trace_csv(biag));
  io::atomic_write_text(dir / "loss_lcls.csv", train::loss_trace_csv(base));
}

std::optional<nc::AffineMap> truth_next_to(const fs::path& bank_path) {
  const fs::path p = bank_path.parent_path() / "truth.afm";
  if (!fs::exists(p)) return std::nullopt;
  return harness::read_affine(p);
}

void print_summary(const harness::SessionReport& r, std::ostream& log) {
  log << std::fixed << std::setprecision(2);
  for (std::size_t s = 0; s < r.session_acc.size(); ++s) {
    log << "session " << s << "  classes " << r.n_classes[s] << "  acc " << r.session_acc[s]
        << "\n";
  }
  log << "average " << r.metrics.average << "  final " << r.metrics.final_acc << "\n";
  log.unsetf(std::ios::floatfield);
}

}  // namespace

int cmd_synth(const RunConfig& config, std::ostream& log) {
  const auto sb = make_bank(config);
  const fs::path dir = out_dir(config);
  harness::write_bank(sb.bank, dir / "bank.fvb");
  if (sb.truth) harness::write_affine(*sb.truth, dir / "truth.afm");
  write_config(config, dir);
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  for (const auto& c : sb.bank.classes) {
    n_train += c.train.rows();
    n_test += c.test.rows();
  }
  log << "classes " << sb.bank.classes.size() << "  train " << n_train << "  test " << n_test
      << "  dim " << sb.bank.dim << "  sigma " << config.noise_sigma << "\n"
      << "wrote " << (dir / "bank.fvb").string() << "\n";
  return kOk;
}

int cmd_train(const RunConfig& config, const Paths& paths, std::ostream& log) {
  config.validate();
  const fs::path dir = out_dir(config);
  const fs::path bank_path = paths.bank.value_or(dir / "bank.fvb");
  const FeatureBank bank = harness::read_bank(bank_path);
  if (bank.dim != config.dim) {
    throw ConfigError("bank width " + std::to_string(bank.dim) + " does not match dim " +
                          std::to_string(config.dim),
                      "dim");
  }
  const auto truth = config.base_weights == "truth" ? truth_next_to(bank_path) : std::nullopt;

  num::Rng rng(config.train_seed);
  train::LossTrace base_trace;
  const WeightBank w0 = base_weights(config, bank, truth, rng, &base_trace);
  auto fit = train::train_biag(gen::init_params(config.shape(), rng), bank, w0,
                               config.biag_training(), config.generator_options(), rng);

  harness::write_weights(w0, paths.weights.value_or(dir / "base_weights.wtb"));
  gen::save_checkpoint(fit.params, paths.checkpoint.value_or(dir / "generator.biag"));
  write_traces(fit.trace, base_trace, dir);
  write_config(config, dir);
  if (!base_trace.mean_lcls.empty()) log << "final L_cls " << base_trace.mean_lcls.back() << "\n";
  if (!fit.trace.mean_lg.empty()) {
    log << "L_G first " << fit.trace.mean_lg.front() << "  final " << fit.trace.mean_lg.back()
        << "\n";
  }
  return kOk;
}

int cmd_run(const RunConfig& config, const Paths& paths, bool oracle, std::ostream& log) {
  config.validate();
  const fs::path dir = out_dir(config);
  const fs::path bank_path = paths.bank.value_or(dir / "bank.fvb");
  const FeatureBank bank = harness::read_bank(bank_path);
  const WeightBank w0 = harness::read_weights(paths.weights.value_or(dir / "base_weights.wtb"));
  if (w0.dim() != bank.dim) {
    throw ConfigError("base weights have width " + std::to_string(w0.dim()) + " but the bank has " +
                          std::to_string(bank.dim),
                      "dim");
  }

  harness::WeightGenerator generator;
  if (oracle) {
    const auto truth = truth_next_to(bank_path);
    if (!truth) throw ConfigError("oracle mode needs truth.afm next to the bank", "affine_link");
    generator = oracle_generator(*truth);
  } else {
    const auto params = gen::load_checkpoint(paths.checkpoint.value_or(dir / "generator.biag"));
    if (params.dim != bank.dim) {
      throw ConfigError("checkpoint width " + std::to_string(params.dim) +
                            " does not match the bank width " + std::to_string(bank.dim),
                        "dim");
    }
    const auto options = config.generator_options();
    if (options.variant == gen::Variant::kFull && params.way() != config.way) {
      throw ConfigError("checkpoint decoder has " + std::to_string(params.way()) +
                            " rows but sessions add " + std::to_string(config.way) + " classes",
                        "way");
    }
    generator = biag_generator(params, options);
  }

  train::LossTrace lg;
  train::LossTrace lcls;
  if (fs::exists(dir / "loss_lg.csv")) lg = parse_loss_trace_csv(read_text(dir / "loss_lg.csv"));
  if (fs::exists(dir / "loss_lcls.csv")) {
    lcls = parse_loss_trace_csv(read_text(dir / "loss_lcls.csv"));
  }
  const auto report = evaluate(config, bank, w0, generator, lg, lcls);
  write_reports(report, dir, oracle ? "affine oracle" : "BiAG");
  write_config(config, dir);
  print_summary(report, log);
  return kOk;
}

int cmd_gradcheck(const RunConfig& config, const std::string& corrupt, std::ostream& log) {
  config.validate();
  // small instance: D=8, 4 new and 5 old classes
  gen::BiagShape shape = config.shape();
  shape.dim = 8;
  shape.way = 4;
  shape.hidden = 0;
  num::Rng rng(config.train_seed);
  gen::BiagParams params = gen::init_params(shape, rng);
  params.decoder = rng.normal_matrix(4, 8, 0.5);
  const Matrix p_old = rng.normal_matrix(5, 8);
  const Matrix w_old = rng.normal_matrix(5, 8);
  const Matrix p_new = rng.normal_matrix(4, 8);
  const Matrix w_new = rng.normal_matrix(4, 8);
  const auto options = config.generator_options();
  const auto mode = train::parse_loss_mode(config.loss_mode);

  std::vector<num::NamedMatrix> named;
  for (const auto& t : params.tensors()) named.push_back({t.name, *t.value});
  if (!corrupt.empty() && std::none_of(named.begin(), named.end(),
                                       [&](const auto& n) { return n.name == corrupt; })) {
    throw ConfigError("no tensor named '" + corrupt + "'", "corrupt");
  }
  num::GradCheckOptions gc;
  gc.corrupt = corrupt;
  const auto report = num::check_gradients(
      [&](num::Tape& tape, std::span<const num::Var> leaves) {
        return train::episode_loss(tape, gen::bind(params, leaves), p_old, p_new, w_old, w_new,
                                   mode, options);
      },
      named, gc);

  log << std::scientific << std::setprecision(3);
  for (const auto& e : report.entries) {
    log << (e.passed ? "PASS " : "FAIL ") << e.name << "  rel_err " << e.rel_error;
    if (!e.passed) {
      log << "  worst [" << e.worst_index << "] analytic " << e.analytic_at_worst << " numeric "
          << e.numeric_at_worst;
    }
    log << "\n";
  }
  log.unsetf(std::ios::floatfield);
  log << "depth " << shape.num_layers << "  " << config.scm_mode << "  "
      << (report.passed() ? "all groups pass" : "gradient check failed") << "\n";
  return report.passed() ? kOk : kVerification;
}

int cmd_ablate(const RunConfig& config, const Paths& paths, std::ostream& log) {
  config.validate();
  const fs::path dir = out_dir(config);
  FeatureBank bank;
  std::optional<nc::AffineMap> truth;
  if (paths.bank) {
    bank = harness::read_bank(*paths.bank);
    truth = truth_next_to(*paths.bank);
  } else {
    auto sb = make_bank(config);
    bank = std::move(sb.bank);
    truth = std::move(sb.truth);
  }
  std::vector<harness::NamedReport> reports;
  for (const auto& name : ablation_variants()) {
    RunConfig variant = with_variant(config, name);
    variant.out = (dir / name).string();
    const auto ex = run_experiment(variant, bank, truth);
    const fs::path vdir = out_dir(variant);
    write_reports(ex.report, vdir, name);
    write_traces(ex.biag_trace, ex.base_trace, vdir);
    write_config(variant, vdir);
    log << std::fixed << std::setprecision(2) << name << "  average " << ex.report.metrics.average
        << "  final " << ex.report.metrics.final_acc;
    log.unsetf(std::ios::floatfield);
    log << "  final L_G " << ex.biag_trace.mean_lg.back() << "\n";
    reports.push_back({name, ex.report});
  }
  io::atomic_write_text(dir / "ablation.md", harness::comparison_markdown(reports));
  write_config(config, dir);
  return kOk;
}

}  // namespace biag::app
