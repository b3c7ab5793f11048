#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <string>
#include <vector>

#include "recinv/commands.hpp"
#include "recinv/util/digest.hpp"
#include "recinv/util/io.hpp"

namespace recinv::commands::detail {

inline std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

class RunManifest {
 public:
  RunManifest(std::string command, Json config)
      : command_(std::move(command)), config_(std::move(config)), started_(utc_now()) {}

  void input(const std::string& role, const fs::path& path) {
    inputs_[role] = {{"path", path.string()}, {"sha256", util::sha256_file(path)}};
  }

  /// Records the digest of a file already written under the output directory.
  void output(const fs::path& root, const fs::path& file) {
    outputs_[fs::relative(file, root).generic_string()] = util::sha256_file(file);
  }

  void write(const fs::path& out_dir) const {
    Json j{{"schema_version", kSchemaVersion},
           {"tool_version", std::string(kToolVersion)},
           {"command", command_},
           {"config", config_},
           {"inputs", inputs_},
           {"outputs", outputs_},
           {"started_at", started_},
           {"finished_at", utc_now()}};
    util::atomic_write(out_dir / "run_manifest.json", util::dump_pretty(j));
  }

 private:
  std::string command_;
  Json config_;
  std::string started_;
  Json inputs_ = Json::object();
  Json outputs_ = Json::object();
};

}  // namespace recinv::commands::detail
