#pragma once

#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <string>
#include <vector>

#include "gfol/error.hpp"
#include "gfol/model.hpp"

namespace gfol {

/// Reproducibility record for a CLI invocation: everything needed to rerun
/// the command and the files it produced.
struct RunManifest {
  std::string command;
  Json inputs = Json::object();
  Json config = Json::object();
  std::vector<std::string> outputs;
  std::uint64_t seed = 0;
  std::string timestamp;
};

inline std::string utc_timestamp() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Seed resolution: GFOL_SEED env var wins, then the explicit value.
inline std::uint64_t resolve_seed(std::uint64_t fallback) {
  if (const char* env = std::getenv("GFOL_SEED")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end && *end == '\0') return static_cast<std::uint64_t>(v);
    fail(ErrorCode::BadParams, "GFOL_SEED must be a nonnegative integer");
  }
  return fallback;
}

inline Json to_json(const RunManifest& m) {
  Json j;
  j["command"] = m.command;
  j["inputs"] = m.inputs;
  j["config"] = m.config;
  j["outputs"] = m.outputs;
  j["seed"] = m.seed;
  j["timestamp"] = m.timestamp;
  return j;
}

inline void write_manifest(const RunManifest& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write manifest to " + path);
  out << to_json(m).dump(2) << "\n";
}

inline RunManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot read manifest from " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    fail(ErrorCode::ParseError, std::string("manifest is not valid JSON: ") + e.what());
  }
  RunManifest m;
  m.command = j.value("command", "");
  m.inputs = j.value("inputs", Json::object());
  m.config = j.value("config", Json::object());
  if (j.contains("outputs"))
    for (const auto& o : j["outputs"]) m.outputs.push_back(o.get<std::string>());
  m.seed = j.value("seed", std::uint64_t{0});
  m.timestamp = j.value("timestamp", "");
  return m;
}

}  // namespace gfol
