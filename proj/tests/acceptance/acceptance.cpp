// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
// RECINV_UPDATE_GOLDEN=1 rewrites tests/golden/golden.json from this build.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <mutex>
#include <sstream>

#include "oracles.hpp"
#include "paths.hpp"
#include "recinv/commands.hpp"
#include "recinv/corpus.hpp"
#include "recinv/metrics.hpp"
#include "recinv/refine.hpp"
#include "recinv/toy_world.hpp"
#include "recinv/util/digest.hpp"
#include "recinv/util/io.hpp"
#include "recinv/util/parallel.hpp"
#include "recinv/util/rng.hpp"
#include "recinv/util/vec.hpp"

using namespace recinv;
namespace fs = std::filesystem;
namespace oracle = recinv::testing::oracle;
using Json = util::Json;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) {
      pass = false;
      detail = what;
    }
  }
};

int failures = 0;

void run(const char* id, const char* title, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("%s [%s] %s (%.2fs)%s%s\n", o.pass ? "PASS" : "FAIL", id, title, secs,
              o.detail.empty() ? "" : ": ", o.detail.c_str());
  std::fflush(stdout);
}

double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

std::string random_text(util::Rng& rng, int lo, int hi, int vocab) {
  std::string s;
  for (auto n = rng.uniform_int(lo, hi); n > 0; --n) {
    if (!s.empty()) s += ' ';
    s += "w" + std::to_string(rng.below(static_cast<std::uint64_t>(vocab)));
  }
  return s;
}

std::size_t workers() { return std::min<std::size_t>(8, util::default_workers()); }

// ---------------------------------------------------------------------------

Outcome metric_oracles() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  auto check = [&](const std::string& ref, const std::string& hyp, double b, double r, double f) {
    const double d = std::max({std::abs(metrics::bleu(ref, hyp) - b), std::abs(metrics::rouge_l(ref, hyp) - r),
                               std::abs(metrics::token_f1(ref, hyp) - f)});
    worst = std::max(worst, d);
    o.require(d <= 1e-9, "mismatch on '" + ref + "' / '" + hyp + "'");
  };
  // Frozen sacrebleu / Python values.
  const auto frozen = util::read_json(testing::fixture("metric_oracle.json"));
  o.require(frozen.at("pairs").size() == 1000, "frozen corpus must hold 1000 pairs");
  for (const auto& p : frozen.at("pairs")) {
    check(p.at("reference"), p.at("hypothesis"), p.at("bleu"), p.at("rouge_l"), p.at("token_f1"));
  }
  // Fresh pairs against the in-tree reference implementations.
  util::Rng rng(20240918);
  for (int i = 0; i < 1000; ++i) {
    const auto ref = random_text(rng, 1, 40, 50);
    const auto hyp = random_text(rng, 1, 40, 50);
    check(ref, hyp, oracle::bleu(ref, hyp), oracle::rouge_l(ref, hyp), oracle::token_f1(ref, hyp));
  }
  const double secs = elapsed(t0);
  o.require(secs < 10.0, fmt("took %.2fs, limit 10s", secs));
  if (o.pass) o.detail = fmt("2000 pairs, max |diff| %.3g", worst);
  return o;
}

Outcome item_and_profile_match() {
  Outcome o;
  util::Rng rng(77);
  for (int i = 0; i < 500; ++i) {
    std::vector<std::string> t, that;
    for (auto n = rng.uniform_int(1, 11); n > 0; --n) t.push_back("Title " + std::to_string(rng.below(30)));
    for (auto n = rng.uniform_int(0, 11); n > 0; --n) that.push_back("Title " + std::to_string(rng.below(30)));
    const auto got = metrics::item_match(t, that);
    o.require(got && std::abs(*got - oracle::item_match(t, that)) <= 1e-12, "ItemMatch differs from set oracle");
  }
  using corpus::Gender;
  using corpus::Profile;
  auto pm = [](Profile ref, std::optional<Profile> got) {
    std::vector<metrics::ProfilePair> b{{ref, got}};
    return *metrics::profile_match(b);
  };
  o.require(pm({30, Gender::Male}, Profile{30, Gender::Female}) == 0.0, "age right, gender wrong must score 0");
  o.require(pm({30, Gender::Male}, Profile{31, Gender::Male}) == 0.0, "age wrong must score 0");
  o.require(pm({30, Gender::Male}, Profile{30, Gender::Male}) == 1.0, "exact match must score 1");
  o.require(pm({30, Gender::Male}, std::nullopt) == 0.0, "missing profile must score 0");
  auto ex = metrics::extract("The user is a 30-year-old female. Liked \"A\".");
  o.require(ex.profile && pm({30, Gender::Male}, ex.profile) == 0.0, "extracted gender mismatch must score 0");
  if (o.pass) o.detail = "500 pairs, 5 profile cases";
  return o;
}

Outcome corpus_round_trip() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  auto mapping = corpus::ColumnMapping::from_json(util::read_json(testing::fixture("columns.json")));
  auto histories = corpus::build_histories(corpus::load_ratings(testing::fixture("ratings_100x20.csv"), mapping).records);
  auto registry = corpus::load_registry(testing::registry_path());
  o.require(histories.size() == 100, "fixture must hold 100 users");
  corpus::SynthesisConfig cfg;
  cfg.master_seed = 42;
  auto a = corpus::synthesize_dataset(histories, cfg, registry);
  auto b = corpus::synthesize_dataset(histories, cfg, registry);
  o.require(a.samples.size() == 500, "expected 500 samples, got " + std::to_string(a.samples.size()));
  std::size_t title_ok = 0, profile_ok = 0, profiled = 0;
  for (const auto& s : a.samples) {
    auto ex = metrics::extract(s.prompt);
    if (ex.titles == s.ground_truth_titles) ++title_ok;
    if (s.has_profile) {
      ++profiled;
      if (ex.profile && *ex.profile == s.profile) ++profile_ok;
    }
    std::string joined;
    for (const auto& seg : s.segments) joined += seg.text;
    o.require(joined == s.prompt, "segments do not concatenate to the prompt: " + s.sample_id);
  }
  o.require(title_ok == a.samples.size(), "title recovery below 100%");
  o.require(profile_ok == profiled, "profile recovery below 100%");
  o.require(corpus::to_jsonl(a.samples) == corpus::to_jsonl(b.samples), "rerun not byte-identical");
  const double secs = elapsed(t0);
  o.require(secs < 30.0, fmt("took %.2fs, limit 30s", secs));
  if (o.pass) {
    o.detail = std::to_string(title_ok) + "/" + std::to_string(a.samples.size()) + " title lists, " +
               std::to_string(profile_ok) + "/" + std::to_string(profiled) + " profiles recovered";
  }
  return o;
}

Outcome split_and_ages() {
  Outcome o;
  util::Rng rng(1234);
  for (int i = 0; i < 1000; ++i) {
    corpus::UserHistory h;
    h.user_id = "u" + std::to_string(i);
    for (auto n = rng.uniform_int(0, 40); n > 0; --n) {
      corpus::RatingRecord r;
      r.user_id = h.user_id;
      r.item_title = "t" + std::to_string(rng.below(100));
      r.rating = static_cast<double>(rng.uniform_int(0, 10)) / 2.0;
      h.records.push_back(r);
    }
    const double k = static_cast<double>(rng.uniform_int(0, 10)) / 2.0;
    auto s = corpus::split_by_threshold(h, k);
    bool ok = s.preferred.size() + s.nonpreferred.size() == h.records.size();
    for (const auto& r : s.preferred) ok = ok && r.rating >= k;
    for (const auto& r : s.nonpreferred) ok = ok && r.rating < k;
    o.require(ok, "split is not a partition for history " + h.user_id);
  }
  int lo = 1000, hi = -1;
  for (int i = 0; i < 10000; ++i) {
    corpus::UserHistory h;
    h.user_id = "s" + std::to_string(i);
    util::Rng r(util::substream_seed(42, h.user_id));
    auto out = corpus::ensure_demographics(h, r);
    lo = std::min(lo, out.demographics->profile.age);
    hi = std::max(hi, out.demographics->profile.age);
  }
  o.require(lo >= corpus::kMinSyntheticAge && hi <= corpus::kMaxSyntheticAge,
            "synthetic age outside [18, 65]: " + std::to_string(lo) + ".." + std::to_string(hi));
  if (o.pass) o.detail = "1000 histories; ages span " + std::to_string(lo) + ".." + std::to_string(hi);
  return o;
}

Outcome refinement_properties() {
  Outcome o;
  util::Rng rng(99);
  for (int i = 0; i < 10000; ++i) {
    std::vector<double> pool(static_cast<std::size_t>(rng.uniform_int(1, 12)));
    // Coarse values make ties common.
    for (double& v : pool) v = static_cast<double>(rng.uniform_int(-4, 4)) / 4.0;
    const auto expect = static_cast<std::size_t>(std::max_element(pool.begin(), pool.end()) - pool.begin());
    o.require(refine::select_best(pool) == expect, "select_best differs from argmax");
  }

  using refine::Decision;
  o.require(refine::should_stop(0.800005, 0.80, 1e-5, 1, 8).decision == Decision::Stop, "0.80 -> 0.800005 must stop");
  o.require(refine::should_stop(0.81, 0.80, 1e-5, 1, 8).decision == Decision::Continue, "0.80 -> 0.81 must continue");
  o.require(refine::should_stop(0.95, 0.80, 1e-5, 8, 8).decision == Decision::Stop, "iteration = max must stop");

  toy::ToyCorpusConfig cc;
  cc.prompts = 1000;
  cc.seed = 2024;
  const auto samples = toy::toy_corpus(cc);
  std::vector<std::string> prompts;
  for (const auto& s : samples) prompts.push_back(s.prompt);
  const auto world = toy::make_toy_world(prompts, toy::ToyWorldConfig{});
  refine::RefinementConfig cfg;
  cfg.max_iterations = 4;
  std::mutex mu;
  std::size_t monotone = 0, bounded = 0;
  util::parallel_for(samples.size(), workers(), [&](std::size_t i) {
    auto z = world.victim->query_logits(samples[i].prompt);
    auto r = refine::attack(*world.victim, *world.inverter, z, *world.projection, cfg);
    bool mono = r.final_similarity >= r.target_similarity_of_base;
    const auto& its = r.trace.iterations;
    for (std::size_t t = 1; t < its.size(); ++t) mono = mono && its[t].selected_similarity >= its[t - 1].selected_similarity;
    std::lock_guard lock(mu);
    monotone += mono;
    bounded += its.size() <= static_cast<std::size_t>(cfg.max_iterations);
  });
  o.require(monotone == samples.size(), std::to_string(samples.size() - monotone) + " runs not monotone");
  o.require(bounded == samples.size(), "a run exceeded max_iterations");
  if (o.pass) o.detail = "10000 pools, 1000 toy runs, boundary cases hold";
  return o;
}

Outcome toy_soundness() {
  Outcome o;
  const std::vector<std::string> vocab{"a", "b", "c", "d", "e", "f", "g", "h"};
  auto cfg = backend::ToyVictimConfig::for_vocab(vocab, 5, 2);
  auto projection = std::make_shared<const logits::ProjectionWeights>(
      logits::ProjectionWeights::seeded(vocab.size(), 16, 8, 7));
  backend::ToyVictim victim(cfg);
  backend::ToyInverter inverter(cfg, projection, backend::ToyInverterOptions{3, 0});
  const int exhaustive = 8 + 64 + 512;

  std::vector<std::string> targets;
  for (std::size_t a = 0; a < 8; ++a) {
    targets.push_back(vocab[a]);
    for (std::size_t b = 0; b < 8; ++b) {
      targets.push_back(vocab[a] + " " + vocab[b]);
      targets.push_back(vocab[a] + " " + vocab[b] + " " + vocab[(a * 3 + b * 5) % 8]);
    }
  }
  std::mutex mu;
  std::size_t top1 = 0;
  double worst = 1.0;
  util::parallel_for(targets.size(), workers(), [&](std::size_t i) {
    auto z = victim.query_logits(targets[i]);
    auto e = logits::project(logits::align_vocab(z, inverter.vocab()), *projection);
    auto set = inverter.invert_embedding(e, exhaustive);
    const bool ok = set.candidates.front().text == targets[i];
    auto back = logits::project(logits::align_vocab(victim.query_logits(set.candidates.front().text), inverter.vocab()), *projection);
    const double cos = util::cosine(back.values, e.values);
    std::lock_guard lock(mu);
    top1 += ok && std::abs(cos - 1.0) <= 1e-12;
    worst = std::min(worst, cos);
  });
  o.require(top1 == targets.size(), std::to_string(targets.size() - top1) + " targets not ranked first with cosine 1");
  if (o.pass) o.detail = std::to_string(targets.size()) + " targets, vocab 8, length <= 3, beam " + std::to_string(exhaustive);
  return o;
}

struct ToyEval {
  double base_item = 0, refined_item = 0, base_sim = 0, refined_sim = 0;
  std::size_t sim_regressions = 0, count = 0;
};

ToyEval evaluate_toy(const toy::ToyCorpusConfig& cc) {
  const auto samples = toy::toy_corpus(cc);
  std::vector<std::string> prompts;
  for (const auto& s : samples) prompts.push_back(s.prompt);
  const auto world = toy::make_toy_world(prompts, toy::ToyWorldConfig{});
  const refine::RefinementConfig cfg;
  std::vector<std::array<double, 4>> rows(samples.size());
  util::parallel_for(samples.size(), workers(), [&](std::size_t i) {
    auto z = world.victim->query_logits(samples[i].prompt);
    auto r = refine::attack(*world.victim, *world.inverter, z, *world.projection, cfg);
    rows[i] = {*metrics::item_match(samples[i].ground_truth_titles, metrics::extract(r.base_prompt).titles),
               *metrics::item_match(samples[i].ground_truth_titles, metrics::extract(r.reconstructed_prompt).titles),
               r.target_similarity_of_base, r.final_similarity};
  });
  ToyEval ev;
  for (const auto& row : rows) {
    ev.base_item += row[0];
    ev.refined_item += row[1];
    ev.base_sim += row[2];
    ev.refined_sim += row[3];
    ev.sim_regressions += row[3] < row[2];
  }
  ev.count = rows.size();
  const double n = static_cast<double>(ev.count);
  ev.base_item /= n;
  ev.refined_item /= n;
  ev.base_sim /= n;
  ev.refined_sim /= n;
  return ev;
}

Outcome toy_gain() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  toy::ToyCorpusConfig cc;  // 200 prompts, 50-title catalog, 3..5 titles, seed 42
  const auto ev = evaluate_toy(cc);
  o.require(ev.sim_regressions == 0, std::to_string(ev.sim_regressions) + " samples lost similarity");
  o.require(ev.refined_item >= ev.base_item, "refined ItemMatch below base");
  o.require(ev.refined_item > ev.base_item, "gap is not strictly positive");
  const double secs = elapsed(t0);
  o.require(secs < 120.0, fmt("took %.1fs, limit 120s", secs));
  const std::string means = fmt("ItemMatch base %.4f refined %.4f gap %+.4f", ev.base_item, ev.refined_item,
                                ev.refined_item - ev.base_item) +
                            fmt("; similarity base %.4f refined %.4f", ev.base_sim, ev.refined_sim);
  o.detail = o.pass ? means : o.detail + " (" + means + ")";
  return o;
}

Outcome length_trend() {
  Outcome o;
  std::vector<double> means;
  for (int n : {3, 7, 11}) {
    toy::ToyCorpusConfig cc;
    cc.n_min = cc.n_max = n;
    means.push_back(evaluate_toy(cc).refined_item);
  }
  o.require(means[0] >= means[1] && means[1] >= means[2], "mean ItemMatch increases with n");
  const auto shown = fmt("n=3: %.4f, n=7: %.4f, n=11: %.4f", means[0], means[1], means[2]);
  o.detail = o.pass ? shown : o.detail + " (" + shown + ")";
  return o;
}

Outcome golden_digests() {
  Outcome o;
  const fs::path dir = testing::scratch_dir("acceptance-golden");
  std::ostringstream log;

  commands::SynthOptions so;
  so.ratings = testing::fixture("ratings_100x20.csv");
  so.columns = testing::fixture("columns.json");
  so.templates = testing::registry_path();
  so.out = dir / "synth";
  so.config.master_seed = 42;
  o.require(commands::cmd_synth(so, log) == 0, "synth failed");

  // The attack golden covers the first ten users to keep the gate fast.
  auto rows = util::read_jsonl(so.out / "dataset.jsonl");
  rows.resize(std::min<std::size_t>(rows.size(), 50));
  util::atomic_write(dir / "subset.jsonl", util::to_jsonl(rows));

  commands::AttackOptions ao;
  ao.dataset = dir / "subset.jsonl";
  ao.out = dir / "attack";
  ao.workers = workers();
  o.require(commands::cmd_attack(ao, log) == 0, "attack failed");

  commands::EvalOptions eo{ao.dataset, ao.out / "reconstructions.jsonl", dir / "eval"};
  o.require(commands::cmd_eval(eo, log) == 0, "eval failed");

  const Json got{{"synth/dataset.jsonl", util::sha256_file(so.out / "dataset.jsonl")},
                 {"synth/manifest.json", util::sha256_file(so.out / "manifest.json")},
                 {"attack/reconstructions.jsonl", util::sha256_file(ao.out / "reconstructions.jsonl")},
                 {"eval/report.json", util::sha256_file(eo.out / "report.json")}};
  const fs::path path = testing::golden("golden.json");
  if (std::getenv("RECINV_UPDATE_GOLDEN")) {
    util::atomic_write(path, util::dump_pretty(got));
    o.detail = "recorded";
    return o;
  }
  const Json want = util::read_json(path);
  for (auto it = got.begin(); it != got.end(); ++it) {
    o.require(want.contains(it.key()) && want.at(it.key()) == it.value(), it.key() + " digest changed");
  }
  if (o.pass) o.detail = "4 digests match";
  return o;
}

}  // namespace

int main() {
  run("1", "metric oracles within 1e-9", metric_oracles);
  run("2", "ItemMatch set oracle and ProfileMatch cases", item_and_profile_match);
  run("3", "corpus round trip, 100 users x 5 tasks", corpus_round_trip);
  run("4", "threshold partition and synthetic ages", split_and_ages);
  run("5", "refinement selection, monotonicity, halting and epsilon", refinement_properties);
  run("6", "toy soundness with exhaustive beam", toy_soundness);
  run("7", "refinement gain on the 200-prompt toy corpus", toy_gain);
  run("8", "ItemMatch non-increasing over n = 3, 7, 11", length_trend);
  run("9", "golden digests for synth, attack and eval", golden_digests);
  std::printf("%s: %d failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
