#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include "run_config.hpp"

namespace biag::app {

enum ExitCode : int { kOk = 0, kValidation = 1, kIo = 2, kVerification = 3 };

struct Paths {
  std::optional<std::filesystem::path> bank;
  std::optional<std::filesystem::path> weights;
  std::optional<std::filesystem::path> checkpoint;
};

int cmd_synth(const RunConfig& config, std::ostream& log);
int cmd_train(const RunConfig& config, const Paths& paths, std::ostream& log);
int cmd_run(const RunConfig& config, const Paths& paths, bool oracle, std::ostream& log);
int cmd_gradcheck(const RunConfig& config, const std::string& corrupt, std::ostream& log);
int cmd_ablate(const RunConfig& config, const Paths& paths, std::ostream& log);

/// Maps library exceptions onto the exit-code contract.
template <typename F>
int guarded(F&& body, std::ostream& err);

}  // namespace biag::app

#include "biag/error.hpp"

namespace biag::app {

template <typename F>
int guarded(F&& body, std::ostream& err) {
  try {
    return body();
  } catch (const IoError& e) {
    err << "io error: " << e.what() << "\n";
    return kIo;
  } catch (const FormatError& e) {
    err << "format error at byte " << e.offset() << ": " << e.what() << "\n";
    return kIo;
  } catch (const ConfigError& e) {
    err << "config error";
    if (!e.field().empty()) err << " [" << e.field() << "]";
    err << ": " << e.what() << "\n";
    return kValidation;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  }
}

}  // namespace biag::app
