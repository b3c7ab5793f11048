#include <ostream>

#include "recinv/commands.hpp"
#include "recinv/error.hpp"
#include "run_manifest.hpp"

namespace recinv::commands {
namespace {

Json synth_config_json(const SynthOptions& o) {
  Json tasks = Json::array();
  for (auto t : o.config.tasks) tasks.push_back(std::string(corpus::to_string(t)));
  return Json{{"ratings", o.ratings.string()},
              {"templates", o.templates.string()},
              {"columns", o.columns ? Json(o.columns->string()) : Json(nullptr)},
              {"k", o.config.rating_threshold_k},
              {"n_min", o.config.n_lo},
              {"n_max", o.config.n_hi},
              {"seed", o.config.master_seed},
              {"tasks", tasks},
              {"item_sampling",
               o.config.item_sampling == corpus::ItemSampling::Random ? "random" : "recency"},
              {"rating_min", o.config.rating_min},
              {"rating_max", o.config.rating_max},
              {"workers", o.config.workers}};
}

}  // namespace

int cmd_synth(const SynthOptions& opts, std::ostream& log) {
  detail::RunManifest run("synth", synth_config_json(opts));
  opts.config.validate();
  corpus::ColumnMapping mapping;
  if (opts.columns) {
    mapping = corpus::ColumnMapping::from_json(util::read_json(*opts.columns));
    run.input("columns", *opts.columns);
  }
  const auto registry = corpus::load_registry(opts.templates);
  const auto loaded = corpus::load_ratings(opts.ratings, mapping);
  run.input("ratings", opts.ratings);
  run.input("templates", opts.templates);
  if (loaded.records.empty()) throw Error("synth: no usable rating rows in " + opts.ratings.string());

  for (const auto& r : loaded.records) {
    if (r.rating < opts.config.rating_min || r.rating > opts.config.rating_max) {
      throw Error("synth: rating " + std::to_string(r.rating) + " for user " + r.user_id +
                  " outside the configured scale");
    }
  }

  const auto histories = corpus::build_histories(loaded.records);
  const auto result = corpus::synthesize_dataset(histories, opts.config, registry);

  const fs::path dataset = opts.out / "dataset.jsonl";
  const fs::path manifest = opts.out / "manifest.json";
  try {
    util::atomic_write(dataset, corpus::to_jsonl(result.samples));
    util::atomic_write(manifest,
                       util::dump_pretty(corpus::dataset_manifest(opts.config, registry, result)));
    run.output(opts.out, dataset);
    run.output(opts.out, manifest);
    run.write(opts.out);
  } catch (...) {
    std::error_code ec;
    fs::remove(dataset, ec);
    fs::remove(manifest, ec);
    throw;
  }

  log << "users: " << result.users << "\n"
      << "samples: " << result.samples.size() << "\n"
      << "skipped: " << result.skipped << "\n";
  for (const auto& [reason, count] : result.skip_reasons) log << "  " << reason << ": " << count << "\n";
  if (loaded.dropped) log << "dropped rows: " << loaded.dropped << " of " << loaded.rows << "\n";
  return 0;
}

}  // namespace recinv::commands
