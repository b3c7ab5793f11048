#include <algorithm>
#include <cmath>

#include "recinv/corpus.hpp"
#include "recinv/error.hpp"
#include "recinv/util/io.hpp"
#include "recinv/util/parallel.hpp"

namespace recinv::corpus {
namespace {

struct UserOutput {
  std::vector<InstructionSample> samples;
  std::vector<SkipReason> skips;
};

UserOutput synthesize_user(const UserHistory& history, const SynthesisConfig& cfg,
                           const std::vector<std::vector<const PromptTemplate*>>& pools) {
  UserOutput out;
  util::Rng rng(util::substream_seed(cfg.master_seed, history.user_id));
  UserHistory h = ensure_demographics(history, rng);
  ThresholdSplit split = split_by_threshold(h, cfg.rating_threshold_k);
  const int n = static_cast<int>(rng.uniform_int(cfg.n_lo, cfg.n_hi - 1));

  std::optional<std::string> target;
  if (cfg.item_sampling == ItemSampling::Random) {
    rng.shuffle(std::span<RatingRecord>(split.preferred));
    rng.shuffle(std::span<RatingRecord>(split.nonpreferred));
    if (!h.records.empty()) target = h.records[rng.below(h.records.size())].item_title;
  } else if (!h.records.empty()) {
    target = h.records.front().item_title;
  }

  for (std::size_t ti = 0; ti < cfg.tasks.size(); ++ti) {
    const auto& pool = pools[ti];
    const PromptTemplate& tmpl = *pool[rng.below(pool.size())];
    RenderRequest req{tmpl, h, split.preferred, split.nonpreferred, n, target};
    RenderOutcome r = render_prompt(req);
    if (r.sample) {
      r.sample->sample_id = h.user_id + "/" + std::string(to_string(cfg.tasks[ti]));
      out.samples.push_back(std::move(*r.sample));
    } else {
      out.skips.push_back(*r.skipped);
    }
  }
  return out;
}

}  // namespace

void SynthesisConfig::validate() const {
  if (n_lo < 1) throw Error("synthesis: n_lo must be >= 1");
  if (n_hi <= n_lo) throw Error("synthesis: n_hi must exceed n_lo");
  if (!std::isfinite(rating_threshold_k) || rating_threshold_k < rating_min ||
      rating_threshold_k > rating_max) {
    throw Error("synthesis: rating threshold k outside the rating scale");
  }
  if (tasks.empty()) throw Error("synthesis: no tasks configured");
}

SynthesisResult synthesize_dataset(std::span<const UserHistory> histories,
                                   const SynthesisConfig& config,
                                   std::span<const PromptTemplate> registry) {
  config.validate();
  std::vector<std::vector<const PromptTemplate*>> pools(config.tasks.size());
  for (std::size_t ti = 0; ti < config.tasks.size(); ++ti) {
    for (const auto& t : registry) {
      if (t.task_type == config.tasks[ti]) pools[ti].push_back(&t);
    }
    if (pools[ti].empty()) {
      throw Error("synthesis: template registry has no templates for task '" +
                  std::string(to_string(config.tasks[ti])) + "'");
    }
  }

  // Canonical user order regardless of how the caller built the list.
  std::vector<const UserHistory*> users;
  users.reserve(histories.size());
  for (const auto& h : histories) users.push_back(&h);
  std::stable_sort(users.begin(), users.end(),
                   [](const UserHistory* a, const UserHistory* b) { return a->user_id < b->user_id; });

  std::vector<UserOutput> slots(users.size());
  util::parallel_for(users.size(), config.workers,
                     [&](std::size_t i) { slots[i] = synthesize_user(*users[i], config, pools); });

  SynthesisResult result;
  result.users = users.size();
  for (auto& slot : slots) {
    for (auto& s : slot.samples) result.samples.push_back(std::move(s));
    for (auto r : slot.skips) {
      ++result.skipped;
      ++result.skip_reasons[std::string(to_string(r))];
    }
  }
  return result;
}

std::string to_jsonl(std::span<const InstructionSample> samples) {
  std::string out;
  for (const auto& s : samples) {
    out += s.to_json().dump();
    out.push_back('\n');
  }
  return out;
}

std::vector<InstructionSample> load_dataset(const std::filesystem::path& path) {
  std::vector<InstructionSample> out;
  for (const auto& row : util::read_jsonl(path)) out.push_back(InstructionSample::from_json(row));
  return out;
}

Json dataset_manifest(const SynthesisConfig& config, std::span<const PromptTemplate> registry,
                      const SynthesisResult& result) {
  Json tasks = Json::array();
  for (auto t : config.tasks) tasks.push_back(std::string(to_string(t)));
  Json reasons = Json::object();
  for (const auto& [k, v] : result.skip_reasons) reasons[k] = v;
  return Json{
      {"master_seed", config.master_seed},
      {"k", config.rating_threshold_k},
      {"n_range", {config.n_lo, config.n_hi}},
      {"tasks", tasks},
      {"item_sampling", config.item_sampling == ItemSampling::Recency ? "recency" : "random"},
      {"template_registry_digest", registry_digest(registry)},
      {"counts",
       {{"users", result.users},
        {"samples", result.samples.size()},
        {"skipped", result.skipped},
        {"skip_reasons", reasons}}},
  };
}

}  // namespace recinv::corpus
