#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>

#include "recinv/commands.hpp"
#include "recinv/error.hpp"
#include "recinv/util/parallel.hpp"
#include "run_manifest.hpp"

namespace recinv::commands {
namespace {

constexpr const char* kOutputName = "reconstructions.jsonl";
constexpr const char* kPartialName = "reconstructions.partial.jsonl";

Json attack_config_json(const AttackOptions& o) {
  Json filter{{"temperature", o.filter.temperature},
              {"top_k", o.filter.top_k ? Json(*o.filter.top_k) : Json(nullptr)},
              {"top_p", o.filter.top_p ? Json(*o.filter.top_p) : Json(nullptr)}};
  return Json{{"dataset", o.dataset.string()},
              {"victim", o.victim},
              {"inverter", o.inverter},
              {"beam_width", o.refine.beam_width},
              {"epsilon", o.refine.epsilon},
              {"max_iterations", o.refine.max_iterations},
              {"include_base_in_pool", o.refine.include_base_in_pool},
              {"similarity_space",
               o.refine.space == refine::SimilaritySpace::Embedding ? "embedding" : "logits"},
              {"reduction", o.reduction == logits::RowReduction::Last ? "last" : "mean"},
              {"filter", filter},
              {"projection", o.projection ? Json(o.projection->string()) : Json(nullptr)},
              {"toy", o.toy.to_json()},
              {"resume", o.resume},
              {"workers", o.workers}};
}

// Finished, error-free lines from a previous run, keyed by sample id.
std::map<std::string, Json> previous_results(const fs::path& out) {
  std::map<std::string, Json> done;
  for (const char* name : {kOutputName, kPartialName}) {
    const fs::path p = out / name;
    if (!fs::exists(p)) continue;
    std::vector<Json> rows;
    try {
      rows = util::read_jsonl(p);
    } catch (const Error&) {
      // A crash can leave a torn last line in the partial file; keep what parses.
      std::ifstream in(p);
      std::string line;
      while (std::getline(in, line)) {
        auto j = Json::parse(line, nullptr, false);
        if (!j.is_discarded()) rows.push_back(std::move(j));
      }
    }
    for (auto& j : rows) {
      if (!j.is_object() || !j.contains("sample_id") || j.contains("error")) continue;
      auto id = j.at("sample_id").get<std::string>();
      done[std::move(id)] = std::move(j);
    }
  }
  return done;
}

struct Backends {
  std::unique_ptr<backend::ModelBackend> victim_remote, inverter_remote;
  std::optional<toy::ToyWorld> world;
  std::shared_ptr<const logits::ProjectionWeights> projection;
  const backend::ModelBackend* victim = nullptr;
  const backend::ModelBackend* inverter = nullptr;
};

Backends make_backends(const AttackOptions& o, std::span<const corpus::InstructionSample> samples) {
  auto check_kind = [](const std::string& v, const char* role) {
    if (v != "toy" && !v.starts_with("http://") && !v.starts_with("https://")) {
      throw Error(std::string("attack: --") + role + " must be 'toy' or an http(s) URL, got '" + v + "'");
    }
  };
  check_kind(o.victim, "victim");
  check_kind(o.inverter, "inverter");

  Backends b;
  std::shared_ptr<const logits::ProjectionWeights> loaded;
  if (o.projection) {
    loaded = std::make_shared<const logits::ProjectionWeights>(logits::ProjectionWeights::load(*o.projection));
  }
  if (o.victim == "toy" || o.inverter == "toy") {
    std::vector<std::string> prompts;
    prompts.reserve(samples.size());
    for (const auto& s : samples) prompts.push_back(s.prompt);
    b.world = toy::make_toy_world(prompts, o.toy, o.inverter == "toy" ? loaded : nullptr);
  }
  if (o.victim == "toy") {
    b.victim = b.world->victim.get();
  } else {
    b.victim_remote = backend::remote_backend(o.victim, o.remote);
    b.victim = b.victim_remote.get();
  }
  if (o.inverter == "toy") {
    b.inverter = b.world->inverter.get();
    b.projection = b.world->projection;
  } else {
    b.inverter_remote = backend::remote_backend(o.inverter, o.remote);
    b.inverter = b.inverter_remote.get();
    b.projection = loaded ? loaded
                          : std::make_shared<const logits::ProjectionWeights>(logits::ProjectionWeights::seeded(
                                b.inverter->vocab().size(), o.toy.seq_len, o.toy.hidden_dim,
                                o.toy.projection_seed));
  }
  if (b.projection->input_dim != b.inverter->vocab().size()) {
    throw Error("attack: projection expects width " + std::to_string(b.projection->input_dim) +
                ", inverter vocabulary has " + std::to_string(b.inverter->vocab().size()));
  }
  if (!b.victim->capabilities().query_logits) throw Error("attack: victim cannot serve logits");
  if (!b.inverter->capabilities().invert_embedding) throw Error("attack: inverter cannot invert embeddings");
  return b;
}

Json attack_one(const corpus::InstructionSample& s, const Backends& b, const AttackOptions& o,
                Json& trace_out) {
  try {
    auto target = b.victim->query_logits(s.prompt);
    target.filter = o.filter;
    auto r = refine::attack(*b.victim, *b.inverter, target, *b.projection, o.refine,
                            refine::AttackOptions{o.reduction});
    trace_out = Json{{"sample_id", s.sample_id},
                     {"base_prompt", r.base_prompt},
                     {"target_similarity_of_base", r.target_similarity_of_base},
                     {"trace", r.trace.to_json()}};
    return Json{{"sample_id", s.sample_id},
                {"base_prompt", r.base_prompt},
                {"reconstructed_prompt", r.reconstructed_prompt},
                {"base_similarity", r.target_similarity_of_base},
                {"final_similarity", r.final_similarity},
                {"iterations", r.trace.iterations.size()},
                {"stop_reason", std::string(refine::to_string(r.trace.stop_reason))},
                {"segments", r.segments.to_json()}};
  } catch (const std::exception& e) {
    trace_out = Json{{"sample_id", s.sample_id}, {"error", e.what()}};
    return Json{{"sample_id", s.sample_id},
                {"base_prompt", ""},
                {"reconstructed_prompt", ""},
                {"stop_reason", "failed"},
                {"error", e.what()}};
  }
}

}  // namespace

std::string trace_file_name(std::string_view sample_id) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : sample_id) {
    if (std::isalnum(c) || c == '-' || c == '.') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('_');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 15]);
    }
  }
  return out + ".json";
}

int cmd_attack(const AttackOptions& opts, std::ostream& log) {
  detail::RunManifest run("attack", attack_config_json(opts));
  opts.refine.validate();
  opts.filter.validate();
  const auto samples = corpus::load_dataset(opts.dataset);
  run.input("dataset", opts.dataset);
  if (opts.projection) run.input("projection", *opts.projection);
  if (samples.empty()) throw Error("attack: dataset is empty");

  // Handshakes happen here, so an unreachable backend aborts before any work.
  const Backends backends = make_backends(opts, samples);

  fs::create_directories(opts.out / "traces");
  std::map<std::string, Json> done;
  if (opts.resume) {
    done = previous_results(opts.out);
  } else {
    std::error_code ec;
    fs::remove(opts.out / kPartialName, ec);
  }

  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!done.count(samples[i].sample_id) ||
        !fs::exists(opts.out / "traces" / trace_file_name(samples[i].sample_id))) {
      pending.push_back(i);
    }
  }

  std::vector<Json> fresh(samples.size());
  std::mutex append_mu;
  std::ofstream partial(opts.out / kPartialName, std::ios::app);
  util::parallel_for(pending.size(), std::max<std::size_t>(1, opts.workers), [&](std::size_t k) {
    const auto& s = samples[pending[k]];
    Json trace;
    Json line = attack_one(s, backends, opts, trace);
    util::atomic_write(opts.out / "traces" / trace_file_name(s.sample_id), util::dump_pretty(trace));
    std::lock_guard lock(append_mu);
    partial << line.dump() << '\n' << std::flush;
    fresh[pending[k]] = std::move(line);
  });
  partial.close();

  std::vector<Json> rows;
  rows.reserve(samples.size());
  std::size_t failed = 0;
  double base_sum = 0.0, final_sum = 0.0;
  std::size_t scored = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    Json& line = fresh[i].is_null() ? done.at(samples[i].sample_id) : fresh[i];
    if (line.contains("error")) {
      ++failed;
    } else if (line.at("base_similarity").is_number() && line.at("final_similarity").is_number()) {
      base_sum += line.at("base_similarity").get<double>();
      final_sum += line.at("final_similarity").get<double>();
      ++scored;
    }
    rows.push_back(line);
  }
  const fs::path output = opts.out / kOutputName;
  util::atomic_write(output, util::to_jsonl(rows));
  std::error_code ec;
  fs::remove(opts.out / kPartialName, ec);

  run.output(opts.out, output);
  for (const auto& s : samples) run.output(opts.out, opts.out / "traces" / trace_file_name(s.sample_id));
  run.write(opts.out);

  log << "samples: " << samples.size() << "\n"
      << "attacked: " << pending.size() << "\n"
      << "resumed: " << samples.size() - pending.size() << "\n"
      << "failed: " << failed << "\n";
  if (scored) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "mean similarity: base %.6f, refined %.6f\n",
                  base_sum / static_cast<double>(scored), final_sum / static_cast<double>(scored));
    log << buf;
  }
  return 0;
}

}  // namespace recinv::commands
