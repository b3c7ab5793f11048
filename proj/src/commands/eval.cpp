#include <cstdio>
#include <map>
#include <ostream>

#include "recinv/commands.hpp"
#include "recinv/error.hpp"
#include "recinv/metrics.hpp"
#include "run_manifest.hpp"

namespace recinv::commands {
namespace {

std::string cell(const std::optional<double>& v, double scale) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *v * scale);
  return buf;
}

void print_table(const metrics::EvalReport& r, std::ostream& log) {
  const auto& a = r.aggregates;
  char line[256];
  std::snprintf(line, sizeof line, "%-10s %-10s %-13s %-10s %-10s %s\n", "samples", "ItemMatch",
                "ProfileMatch", "BLEU", "ROUGE", "Token-level F1");
  log << line;
  std::snprintf(line, sizeof line, "%-10zu %-10s %-13s %-10s %-10s %s\n", a.count,
                cell(a.item_match, 1.0).c_str(), cell(a.profile_match, 1.0).c_str(),
                cell(a.bleu, 1.0).c_str(), cell(a.rouge_l, 1.0).c_str(), cell(a.token_f1, 1.0).c_str());
  log << line;
}

}  // namespace

int cmd_eval(const EvalOptions& opts, std::ostream& log) {
  detail::RunManifest run("eval", Json{{"dataset", opts.dataset.string()},
                                       {"predictions", opts.predictions.string()},
                                       {"max_unknown_fraction", opts.max_unknown_fraction}});
  const auto samples = corpus::load_dataset(opts.dataset);
  const auto rows = util::read_jsonl(opts.predictions);
  run.input("dataset", opts.dataset);
  run.input("predictions", opts.predictions);
  if (rows.empty()) throw Error("no predictions in " + opts.predictions.string());

  std::map<std::string, const corpus::InstructionSample*> by_id;
  for (const auto& s : samples) by_id[s.sample_id] = &s;

  std::vector<metrics::EvalPair> pairs;
  std::vector<std::string> unknown;
  std::map<std::string, std::size_t> seen;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& j = rows[i];
    if (!j.is_object() || !j.contains("sample_id") || !j.contains("reconstructed_prompt")) {
      throw Error("predictions line " + std::to_string(i + 1) +
                  ": expected {sample_id, reconstructed_prompt}");
    }
    const auto id = j.at("sample_id").get<std::string>();
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      unknown.push_back(id);
      continue;
    }
    if (!seen.emplace(id, i).second) throw Error("predictions: duplicate sample_id '" + id + "'");
    pairs.push_back({it->second, j.at("reconstructed_prompt").get<std::string>()});
  }

  if (!unknown.empty()) {
    log << "unknown sample ids (" << unknown.size() << "), excluded:\n";
    for (const auto& id : unknown) log << "  " << id << "\n";
  }
  const double unknown_share = static_cast<double>(unknown.size()) / static_cast<double>(rows.size());
  if (unknown_share > opts.max_unknown_fraction) {
    log << "error: " << unknown.size() << " of " << rows.size()
        << " predictions reference unknown samples\n";
    return 2;
  }
  if (pairs.empty()) throw Error("no predictions match the dataset");

  const auto report = metrics::evaluate(pairs);
  Json j = report.to_json();
  j["unknown_sample_ids"] = unknown;

  const std::pair<const char*, std::string> files[] = {
      {"report.json", util::dump_pretty(j)},
      {"per_sample.csv", report.per_sample_csv()},
      {"positional.csv", report.positional_csv()},
      {"by_item_count.csv", report.by_item_count_csv()},
  };
  for (const auto& [name, content] : files) {
    util::atomic_write(opts.out / name, content);
    run.output(opts.out, opts.out / name);
  }
  run.write(opts.out);

  print_table(report, log);
  if (report.excluded_empty_reference) {
    log << "samples without reference titles (excluded from ItemMatch): "
        << report.excluded_empty_reference << "\n";
  }
  return 0;
}

}  // namespace recinv::commands
