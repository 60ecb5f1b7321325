#pragma once

#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "atp/experiment.hpp"

namespace atp {

inline nlohmann::json report_to_json(const ExperimentReport& report) {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& r : report.records) {
    nlohmann::json j = record_to_json(r);
    j["runtime_ms"] = r.runtime_ms;
    records.push_back(std::move(j));
  }
  return nlohmann::json{{"seed", report.seed},
                        {"config", report.config_snapshot},
                        {"records", std::move(records)}};
}

inline ExperimentReport report_from_json(const nlohmann::json& j) {
  ExperimentReport report;
  report.seed = j.at("seed").get<std::uint64_t>();
  report.config_snapshot = j.at("config");
  for (const auto& rec : j.at("records")) report.records.push_back(record_from_json(rec));
  return report;
}

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

}  // namespace detail

// "table" mirrors the result-table layout (row = victim, one score column per
// method) and appends a per-method detail block; "csv" is the aggregate
// table; "json" round-trips the full report.
inline std::string render_report(const ExperimentReport& report, const std::string& format) {
  const std::vector<MethodAggregate> aggs = report.aggregates();
  if (format == "json") return report_to_json(report).dump();
  if (format == "csv") {
    std::ostringstream out;
    out << "method,n,failures,mean_clean_score,mean_attacked_score,mean_clean_loss,"
           "mean_attacked_loss\n";
    for (const auto& a : aggs)
      out << a.method << ',' << a.n << ',' << a.failures << ',' << detail::format_double(a.mean_clean_score)
          << ',' << detail::format_double(a.mean_attacked_score) << ','
          << detail::format_double(a.mean_clean_loss) << ',' << detail::format_double(a.mean_attacked_loss)
          << '\n';
    return out.str();
  }
  if (format == "table") {
    std::string victim = "victim";
    if (report.config_snapshot.contains("victim_label"))
      victim = report.config_snapshot["victim_label"].get<std::string>();
    std::ostringstream out;
    out << "attacked alignment score (mean)\n";
    out << "victim";
    for (const auto& a : aggs) out << '\t' << a.method;
    out << '\n' << victim;
    for (const auto& a : aggs) out << '\t' << detail::format_double(a.mean_attacked_score);
    out << "\n\n";
    out << "method\tn\tfail\tclean_score\tattacked_score\tclean_loss\tattacked_loss\n";
    for (const auto& a : aggs)
      out << a.method << '\t' << a.n << '\t' << a.failures << '\t'
          << detail::format_double(a.mean_clean_score) << '\t'
          << detail::format_double(a.mean_attacked_score) << '\t'
          << detail::format_double(a.mean_clean_loss) << '\t'
          << detail::format_double(a.mean_attacked_loss) << '\n';
    return out.str();
  }
  throw std::invalid_argument("render_report: unknown format '" + format + "'");
}

}  // namespace atp
