#pragma once

#include <string>
#include <vector>

#include "biag/harness/protocol.hpp"

namespace biag::harness {

/// `session,n_classes,acc` with two-decimal accuracies.
std::string sessions_csv(const SessionReport& report);
std::string report_json(const SessionReport& report);
/// Inverse of report_json. Throws FormatError on malformed input.
SessionReport parse_report_json(const std::string& text);
/// One header row of session indices, one accuracy row, then the metrics.
std::string report_markdown(const SessionReport& report, const std::string& title);

struct NamedReport {
  std::string name;
  SessionReport report;
};
/// Side-by-side table: one row per report, session columns plus average and
/// final, then final-epoch L_G when present.
std::string comparison_markdown(const std::vector<NamedReport>& reports);

}  // namespace biag::harness
