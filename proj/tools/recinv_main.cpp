#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "recinv/commands.hpp"
#include "recinv/error.hpp"

namespace {

using namespace recinv;

std::vector<corpus::TaskType> parse_tasks(const std::vector<std::string>& names) {
  std::vector<corpus::TaskType> tasks;
  for (const auto& n : names) tasks.push_back(corpus::parse_task(n));
  return tasks;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prompt inversion toolkit for LLM-based recommenders"};
  app.set_config("--config", "", "TOML/INI file with option defaults; command-line flags win");
  app.set_version_flag("--version", std::string(commands::kToolVersion));
  app.require_subcommand(1);

  // synth
  commands::SynthOptions synth;
  std::vector<std::string> task_names;
  std::string sampling = "recency";
  auto* s = app.add_subcommand("synth", "Build an instruction dataset from a rating dump");
  s->add_option("--ratings", synth.ratings, "CSV/TSV rating dump")->required()->check(CLI::ExistingFile);
  s->add_option("--templates", synth.templates, "Template registry JSON")->required()->check(CLI::ExistingFile);
  s->add_option("--columns", synth.columns, "Column mapping JSON")->check(CLI::ExistingFile);
  s->add_option("--k", synth.config.rating_threshold_k, "Preference threshold (rating >= k is liked)")
      ->capture_default_str();
  s->add_option("--n-min", synth.config.n_lo, "Smallest title budget")->capture_default_str();
  s->add_option("--n-max", synth.config.n_hi, "Title budget upper bound, exclusive")->capture_default_str();
  s->add_option("--seed", synth.config.master_seed, "Master seed")->capture_default_str();
  s->add_option("--tasks", task_names, "Task types (default: all five)")->delimiter(',');
  s->add_option("--item-sampling", sampling, "recency or random")
      ->check(CLI::IsMember({"recency", "random"}))
      ->capture_default_str();
  s->add_option("--rating-min", synth.config.rating_min)->capture_default_str();
  s->add_option("--rating-max", synth.config.rating_max)->capture_default_str();
  s->add_option("--workers", synth.config.workers)->capture_default_str();
  s->add_option("--out", synth.out, "Output directory")->required();

  // attack
  commands::AttackOptions attack;
  std::string space = "embedding", reduction = "last";
  bool no_base_in_pool = false;
  int timeout_ms = 30000;
  auto* a = app.add_subcommand("attack", "Reconstruct dataset prompts from victim logits");
  a->add_option("--dataset", attack.dataset, "Dataset JSONL")->required()->check(CLI::ExistingFile);
  a->add_option("--victim", attack.victim, "toy or a model-server URL")->capture_default_str();
  a->add_option("--inverter", attack.inverter, "toy or a model-server URL")->capture_default_str();
  a->add_option("--beam", attack.refine.beam_width, "Beam width K")->capture_default_str();
  a->add_option("--epsilon", attack.refine.epsilon, "Refinement stop threshold")->capture_default_str();
  a->add_option("--max-iterations", attack.refine.max_iterations)->capture_default_str();
  a->add_flag("--no-base-in-pool", no_base_in_pool, "Do not carry the hypothesis into later pools");
  a->add_option("--similarity", space, "embedding or logits")
      ->check(CLI::IsMember({"embedding", "logits"}))
      ->capture_default_str();
  a->add_option("--reduction", reduction, "Row reduction for multi-row logits: last or mean")
      ->check(CLI::IsMember({"last", "mean"}))
      ->capture_default_str();
  a->add_option("--projection", attack.projection, "Projection weights JSON")->check(CLI::ExistingFile);
  a->add_option("--projection-seed", attack.toy.projection_seed)->capture_default_str();
  a->add_option("--seq-len", attack.toy.seq_len, "Projection T")->capture_default_str();
  a->add_option("--hidden-dim", attack.toy.hidden_dim, "Projection d")->capture_default_str();
  a->add_option("--temperature", attack.filter.temperature)->capture_default_str();
  a->add_option("--top-k", attack.filter.top_k);
  a->add_option("--top-p", attack.filter.top_p);
  a->add_option("--toy-seed", attack.toy.victim_seed, "Toy victim hash seed")->capture_default_str();
  a->add_option("--toy-victim-order", attack.toy.victim_ngram_order)->capture_default_str();
  a->add_option("--toy-inverter-order", attack.toy.inverter_ngram_order)->capture_default_str();
  a->add_option("--toy-inverter-noise", attack.toy.inverter_noise)->capture_default_str();
  a->add_option("--toy-max-length", attack.toy.max_length, "0: longest prompt + 2")->capture_default_str();
  a->add_option("--toy-patience", attack.toy.patience)->capture_default_str();
  a->add_option("--timeout-ms", timeout_ms, "Remote request timeout")->capture_default_str();
  a->add_option("--retries", attack.remote.retries)->capture_default_str();
  a->add_option("--max-in-flight", attack.remote.max_in_flight)->capture_default_str();
  a->add_flag("--resume", attack.resume, "Keep finished samples from a previous run");
  a->add_option("--workers", attack.workers)->capture_default_str();
  a->add_option("--out", attack.out, "Output directory")->required();

  // eval
  commands::EvalOptions eval;
  auto* e = app.add_subcommand("eval", "Score reconstructions against the dataset");
  e->add_option("--dataset", eval.dataset)->required()->check(CLI::ExistingFile);
  e->add_option("--predictions", eval.predictions, "JSONL of {sample_id, reconstructed_prompt}")
      ->required()
      ->check(CLI::ExistingFile);
  e->add_option("--max-unknown", eval.max_unknown_fraction, "Largest tolerated share of unknown ids")
      ->capture_default_str();
  e->add_option("--out", eval.out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*s) {
      if (!task_names.empty()) synth.config.tasks = parse_tasks(task_names);
      synth.config.item_sampling =
          sampling == "random" ? corpus::ItemSampling::Random : corpus::ItemSampling::Recency;
      return commands::cmd_synth(synth, std::cout);
    }
    if (*a) {
      attack.refine.include_base_in_pool = !no_base_in_pool;
      attack.refine.space =
          space == "logits" ? refine::SimilaritySpace::Logits : refine::SimilaritySpace::Embedding;
      attack.reduction = reduction == "mean" ? logits::RowReduction::Mean : logits::RowReduction::Last;
      attack.remote.timeout = std::chrono::milliseconds(timeout_ms);
      if (const char* token = std::getenv(backend::kAuthTokenEnv)) attack.remote.auth_token = token;
      return commands::cmd_attack(attack, std::cout);
    }
    if (*e) return commands::cmd_eval(eval, std::cout);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 1;
}
