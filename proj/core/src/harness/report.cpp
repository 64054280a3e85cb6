#include "biag/harness/report.hpp"

#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#include "biag/error.hpp"

namespace biag::harness {

using nlohmann::json;

namespace {

std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

json trace_json(const train::LossTrace& t) {
  return json{{"mean_lg", t.mean_lg}, {"mean_lcls", t.mean_lcls}};
}

train::LossTrace trace_from(const json& j) {
  train::LossTrace t;
  t.mean_lg = j.at("mean_lg").get<std::vector<double>>();
  t.mean_lcls = j.at("mean_lcls").get<std::vector<double>>();
  return t;
}

}  // namespace

std::string sessions_csv(const SessionReport& report) {
  std::ostringstream out;
  out << "session,n_classes,acc\n";
  for (std::size_t t = 0; t < report.session_acc.size(); ++t) {
    out << t << ',' << report.n_classes[t] << ',' << fixed2(report.session_acc[t]) << '\n';
  }
  return out.str();
}

std::string report_json(const SessionReport& report) {
  json j;
  j["session_acc"] = report.session_acc;
  j["n_classes"] = report.n_classes;
  j["average_acc"] = report.metrics.average;
  j["final_acc"] = report.metrics.final_acc;
  j["final_base_acc"] = report.metrics.final_base;
  j["final_new_avg_acc"] = report.metrics.final_new_avg;
  j["final_last_way_acc"] = report.metrics.final_last_way;
  j["loss_lg"] = trace_json(report.lg);
  j["loss_lcls"] = trace_json(report.lcls);
  j["config"] = report.config_echo.empty() ? json(nullptr) : json::parse(report.config_echo);
  return j.dump(2) + "\n";
}

SessionReport parse_report_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    SessionReport r;
    r.session_acc = j.at("session_acc").get<std::vector<double>>();
    r.n_classes = j.at("n_classes").get<std::vector<std::size_t>>();
    r.metrics.average = j.at("average_acc").get<double>();
    r.metrics.final_acc = j.at("final_acc").get<double>();
    r.metrics.final_base = j.at("final_base_acc").get<double>();
    r.metrics.final_new_avg = j.at("final_new_avg_acc").get<double>();
    r.metrics.final_last_way = j.at("final_last_way_acc").get<double>();
    r.lg = trace_from(j.at("loss_lg"));
    r.lcls = trace_from(j.at("loss_lcls"));
    if (!j.at("config").is_null()) r.config_echo = j.at("config").dump();
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed report: ") + e.what(), 0);
  }
}

std::string report_markdown(const SessionReport& report, const std::string& title) {
  std::ostringstream out;
  out << "## " << title << "\n\n|";
  for (std::size_t t = 0; t < report.session_acc.size(); ++t) out << ' ' << t << " |";
  out << " Avg |\n|";
  for (std::size_t t = 0; t <= report.session_acc.size(); ++t) out << "---:|";
  out << "\n|";
  for (double a : report.session_acc) out << ' ' << fixed2(a) << " |";
  out << ' ' << fixed2(report.metrics.average) << " |\n\n";
  out << "| Metric | Value |\n|---|---:|\n";
  out << "| Final | " << fixed2(report.metrics.final_acc) << " |\n";
  out << "| Final base | " << fixed2(report.metrics.final_base) << " |\n";
  out << "| Final new avg | " << fixed2(report.metrics.final_new_avg) << " |\n";
  out << "| Final last way | " << fixed2(report.metrics.final_last_way) << " |\n";
  return out.str();
}

std::string comparison_markdown(const std::vector<NamedReport>& reports) {
  std::ostringstream out;
  std::size_t sessions = 0;
  for (const auto& r : reports) sessions = std::max(sessions, r.report.session_acc.size());
  out << "| Variant |";
  for (std::size_t t = 0; t < sessions; ++t) out << ' ' << t << " |";
  out << " Avg | Final | Final L_G |\n|---|";
  for (std::size_t t = 0; t < sessions + 3; ++t) out << "---:|";
  out << '\n';
  for (const auto& r : reports) {
    out << "| " << r.name << " |";
    for (std::size_t t = 0; t < sessions; ++t) {
      out << ' ' << (t < r.report.session_acc.size() ? fixed2(r.report.session_acc[t]) : "-")
          << " |";
    }
    out << ' ' << fixed2(r.report.metrics.average) << " | " << fixed2(r.report.metrics.final_acc)
        << " | ";
    if (!r.report.lg.mean_lg.empty()) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.4f", r.report.lg.mean_lg.back());
      out << buf;
    } else {
      out << '-';
    }
    out << " |\n";
  }
  return out.str();
}

}  // namespace biag::harness
