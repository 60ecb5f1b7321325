#pragma once

#include <ctime>
#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "atp/version.hpp"

namespace atp {

// Written before any work starts; holds everything needed to reproduce the
// run (fully resolved config, dataset, seed, tool version).
struct RunManifest {
  std::string subcommand;
  nlohmann::json config = nlohmann::json::object();
  std::string dataset_path;
  std::uint64_t seed = 0;
  std::string tool_version = kVersion;
  std::string timestamp_utc;
};

inline std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline nlohmann::json manifest_to_json(const RunManifest& m) {
  return nlohmann::json{{"subcommand", m.subcommand}, {"config", m.config},
                        {"dataset", m.dataset_path},  {"seed", m.seed},
                        {"tool_version", m.tool_version}, {"timestamp_utc", m.timestamp_utc}};
}

inline RunManifest manifest_from_json(const nlohmann::json& j) {
  RunManifest m;
  m.subcommand = j.at("subcommand").get<std::string>();
  m.config = j.at("config");
  m.dataset_path = j.at("dataset").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.tool_version = j.at("tool_version").get<std::string>();
  m.timestamp_utc = j.at("timestamp_utc").get<std::string>();
  return m;
}

inline void write_manifest(const RunManifest& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_manifest: cannot open " + path);
  out << manifest_to_json(m).dump(2) << '\n';
  if (!out) throw std::runtime_error("write_manifest: write failed for " + path);
}

inline RunManifest read_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_manifest: cannot open " + path);
  nlohmann::json j;
  in >> j;
  return manifest_from_json(j);
}

}  // namespace atp
