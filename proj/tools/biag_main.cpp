#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "app/commands.hpp"

namespace {

biag::app::RunConfig load_config(const std::string& path, const std::vector<std::string>& sets,
                                 const std::optional<std::uint64_t>& seed,
                                 const std::string& out) {
  biag::app::RunConfig cfg;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw biag::IoError("cannot read config " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    cfg = biag::app::config_from_json(buf.str());
  }
  for (const auto& s : sets) biag::app::apply_override(cfg, s);
  if (seed) {
    cfg.data_seed = *seed;
    cfg.train_seed = *seed;
  }
  if (!out.empty()) cfg.out = out;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"BiAG few-shot class-incremental weight generator"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string bank;
  std::string weights;
  std::string checkpoint;
  std::string corrupt;
  bool oracle = false;

  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--set", sets, "override a config field, key=value")->take_all();
  app.add_option("--seed", seed, "data and training seed");
  app.add_option("--out", out, "output directory");

  auto* synth = app.add_subcommand("synth", "write a synthetic feature bank");
  auto* train = app.add_subcommand("train", "fit base weights and the generator");
  auto* run = app.add_subcommand("run", "run the incremental sessions and write reports");
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of the generator");
  auto* ablate = app.add_subcommand("ablate", "train and evaluate the six ablation variants");
  for (auto* sub : {train, run, ablate}) sub->add_option("--bank", bank, "feature bank file");
  for (auto* sub : {train, run}) {
    sub->add_option("--weights", weights, "base weight file");
    sub->add_option("--checkpoint", checkpoint, "generator checkpoint");
  }
  run->add_flag("--oracle", oracle, "use the hidden affine map instead of the generator");
  gradcheck->add_option("--corrupt", corrupt, "perturb this tensor's analytic gradient");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : biag::app::kValidation;
  }

  return biag::app::guarded(
      [&] {
        const auto cfg = load_config(config_path, sets, seed, out);
        biag::app::Paths paths;
        if (!bank.empty()) paths.bank = bank;
        if (!weights.empty()) paths.weights = weights;
        if (!checkpoint.empty()) paths.checkpoint = checkpoint;
        if (*synth) return biag::app::cmd_synth(cfg, std::cout);
        if (*train) return biag::app::cmd_train(cfg, paths, std::cout);
        if (*run) return biag::app::cmd_run(cfg, paths, oracle, std::cout);
        if (*gradcheck) return biag::app::cmd_gradcheck(cfg, corrupt, std::cout);
        return biag::app::cmd_ablate(cfg, paths, std::cout);
      },
      std::cerr);
}
