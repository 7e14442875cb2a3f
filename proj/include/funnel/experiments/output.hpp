#ifndef FUNNEL_EXPERIMENTS_OUTPUT_HPP
#define FUNNEL_EXPERIMENTS_OUTPUT_HPP

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "funnel/core/error.hpp"
#include "funnel/experiments/config.hpp"
#include "funnel/experiments/table.hpp"

namespace funnel::experiments {

inline constexpr const char* artifact_name = "funnel_lab";
inline constexpr const char* artifact_version = "0.1.0";

/// Everything a subcommand produces. exit_code is 0 or 1; configuration
/// errors never get this far.
struct RunOutput {
  std::string subcommand;
  Config config;  // fully resolved: defaults, then file, then flags
  Table records;
  Json summary = Json::object();
  std::string message;
  int exit_code = 0;
};

enum class Format { csv, json, both };

inline Format parse_format(const std::string& s) {
  if (s == "csv") return Format::csv;
  if (s == "json") return Format::json;
  if (s == "both") return Format::both;
  fail(ErrorKind::config, "format must be csv, json or both, got '" + s + "'");
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

/// Depends only on the subcommand and the resolved configuration.
inline std::string spec_hash(const RunOutput& r) {
  return short_hash(r.subcommand + "\n" + r.config.canonical());
}

inline Json config_json(const Config& c) {
  Json out = Json::object();
  for (const auto& [section, kv] : c.sections()) {
    Json s = Json::object();
    for (const auto& [k, v] : kv) s[k] = v;
    out[section] = std::move(s);
  }
  return out;
}

/// The JSON document. The timestamp appears only under "provenance".
inline Json document(const RunOutput& r, const std::string& timestamp) {
  Json doc = Json::object();
  doc["spec"] = Json{{"subcommand", r.subcommand}, {"config", config_json(r.config)}};
  doc["records"] = to_json(r.records);
  doc["summary"] = r.summary;
  doc["provenance"] = Json{{"artifact", artifact_name},
                           {"version", artifact_version},
                           {"timestamp", timestamp},
                           {"spec_hash", spec_hash(r)},
                           {"resolved_config", r.config.canonical()}};
  return doc;
}

inline std::string output_stem(const RunOutput& r, const std::string& timestamp) {
  return r.subcommand + "-" + timestamp + "-" + spec_hash(r);
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot open '" + path.string() + "' for writing");
  out << content;
  out.flush();
  if (!out) fail(ErrorKind::io, "write to '" + path.string() + "' failed");
}

inline std::vector<std::filesystem::path> write_outputs(const RunOutput& r,
                                                        const std::filesystem::path& dir,
                                                        Format format,
                                                        const std::string& timestamp) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorKind::io, "cannot create output directory '" + dir.string() + "': " + ec.message());
  const std::string stem = output_stem(r, timestamp);
  std::vector<std::filesystem::path> paths;
  if (format != Format::json) {
    paths.push_back(dir / (stem + ".csv"));
    write_file(paths.back(), to_csv(r.records));
  }
  if (format != Format::csv) {
    paths.push_back(dir / (stem + ".json"));
    write_file(paths.back(), document(r, timestamp).dump(2) + "\n");
  }
  return paths;
}

}  // namespace funnel::experiments

#endif  // FUNNEL_EXPERIMENTS_OUTPUT_HPP
