#pragma once

// The synth, attack and eval commands. Each returns a process exit code and
// writes its outputs atomically under `out`.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include <json.hpp>

#include "recinv/backend.hpp"
#include "recinv/corpus.hpp"
#include "recinv/logits.hpp"
#include "recinv/refine.hpp"
#include "recinv/toy_world.hpp"

namespace recinv::commands {

using Json = nlohmann::json;
namespace fs = std::filesystem;

inline constexpr std::string_view kToolVersion = "recinv 0.1.0";
inline constexpr int kSchemaVersion = 1;

struct SynthOptions {
  fs::path ratings;
  fs::path templates;
  fs::path out;
  std::optional<fs::path> columns;  // ColumnMapping JSON
  corpus::SynthesisConfig config;
};

/// Writes dataset.jsonl, manifest.json and run_manifest.json.
int cmd_synth(const SynthOptions& opts, std::ostream& log);

struct AttackOptions {
  fs::path dataset;
  fs::path out;
  std::string victim = "toy";    // "toy" or an http(s) endpoint
  std::string inverter = "toy";
  refine::RefinementConfig refine;
  toy::ToyWorldConfig toy;
  std::optional<fs::path> projection;  // weights file; otherwise seeded
  logits::FilterMeta filter;
  logits::RowReduction reduction = logits::RowReduction::Last;
  backend::RemoteOptions remote;
  bool resume = false;
  std::size_t workers = 1;
};

/// Writes reconstructions.jsonl (dataset order), traces/<id>.json and
/// run_manifest.json. With `resume`, samples already in the output are kept.
int cmd_attack(const AttackOptions& opts, std::ostream& log);

struct EvalOptions {
  fs::path dataset;
  fs::path predictions;
  fs::path out;
  double max_unknown_fraction = 0.10;
};

/// Writes report.json, per_sample.csv, positional.csv, by_item_count.csv and
/// run_manifest.json, and prints the headline table.
int cmd_eval(const EvalOptions& opts, std::ostream& log);

/// File name used for a sample's trace.
std::string trace_file_name(std::string_view sample_id);

}  // namespace recinv::commands
