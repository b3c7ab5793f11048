#include "recinv/refine.hpp"

#include <cmath>
#include <limits>
#include <unordered_set>

#include "recinv/error.hpp"
#include "recinv/util/vec.hpp"

namespace recinv::refine {
namespace {

constexpr double kFailedScore = -std::numeric_limits<double>::infinity();

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

template <typename Fn>
auto staged(const char* stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const RetryableError& e) {
    throw RetryableError(std::string("attack[") + stage + "]: " + e.what());
  } catch (const std::exception& e) {
    throw Error(std::string("attack[") + stage + "]: " + e.what());
  }
}

}  // namespace

void RefinementConfig::validate() const {
  if (beam_width < 1) throw Error("refinement: beam width must be >= 1");
  if (!(epsilon > 0.0)) throw Error("refinement: epsilon must be > 0");
  if (max_iterations < 1) throw Error("refinement: max_iterations must be >= 1");
}

Similarity cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error("cosine_similarity: length mismatch (" + std::to_string(a.size()) + " vs " +
                std::to_string(b.size()) + ")");
  }
  Similarity s;
  s.value = util::cosine(a, b, &s.degenerate);
  return s;
}

Target embed_logits(const logits::LogitMatrix& z, const ScoringContext& ctx) {
  logits::LogitMatrix filtered = z;
  filtered.filter = ctx.filter;
  filtered = logits::apply_filters(filtered);
  logits::AlignedLogits h = logits::align_vocab(filtered, ctx.inverter_vocab, ctx.reduction);
  Target t;
  t.embedding = logits::project(h, *ctx.projection);
  t.aligned = std::move(h.values);
  return t;
}

Target embed_prompt(std::string_view prompt, const ScoringContext& ctx) {
  return embed_logits(ctx.victim->query_logits(prompt), ctx);
}

std::vector<CandidateScore> score_candidates(const backend::CandidateSet& candidates,
                                             const Target& target, const ScoringContext& ctx) {
  std::vector<CandidateScore> scores(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    try {
      Target c = embed_prompt(candidates.candidates[i].text, ctx);
      Similarity s = ctx.space == SimilaritySpace::Embedding
                         ? cosine_similarity(c.embedding.values, target.embedding.values)
                         : cosine_similarity(c.aligned, target.aligned);
      scores[i].similarity = s.value;
      scores[i].degenerate = s.degenerate;
    } catch (const std::exception& e) {
      scores[i].failed = true;
      scores[i].similarity = kFailedScore;
      scores[i].error = e.what();
    }
  }
  return scores;
}

std::size_t select_best(std::span<const double> similarities) {
  if (similarities.empty()) throw Error("select_best: empty similarity list");
  std::size_t best = 0;
  for (std::size_t i = 1; i < similarities.size(); ++i) {
    if (similarities[i] > similarities[best]) best = i;
  }
  return best;
}

StopCheck should_stop(double current, double previous, double epsilon, int iteration,
                      int max_iterations) {
  StopCheck c;
  const double gain = current - previous;
  c.degraded = gain < 0.0;
  c.capped = iteration >= max_iterations;
  if (gain < epsilon || c.capped) c.decision = Decision::Stop;
  return c;
}

std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::Converged: return "converged";
    case StopReason::MaxIterations: return "max_iterations";
    case StopReason::Degraded: return "degraded";
    case StopReason::InverterFailed: return "inverter_failed";
  }
  return "converged";
}

Json RefinementTrace::to_json() const {
  Json its = Json::array();
  for (const auto& it : iterations) {
    Json sims = Json::array();
    for (const auto& s : it.similarities) sims.push_back(optional_number(s));
    its.push_back({{"candidates", it.candidates.to_json()},
                   {"similarities", sims},
                   {"selected_index", it.selected_index},
                   {"pool_best", it.pool_best},
                   {"selected_similarity", it.selected_similarity},
                   {"hypothesis", it.hypothesis},
                   {"kept_previous", it.kept_previous}});
  }
  return Json{{"iterations", its},
              {"final_prompt", final_prompt},
              {"final_similarity", final_similarity},
              {"base_similarity", base_similarity},
              {"stop_reason", std::string(to_string(stop_reason))},
              {"error", error ? Json(*error) : Json(nullptr)}};
}

RefinementTrace run_refinement(const Target& target, const backend::CandidateSet& base,
                               const backend::ModelBackend& inverter, const ScoringContext& ctx,
                               const RefinementConfig& cfg) {
  cfg.validate();
  if (base.candidates.empty()) throw Error("run_refinement: empty base candidate set");

  RefinementTrace trace;
  backend::CandidateSet pool = base;
  pool.iteration = 0;
  std::string incumbent;
  double best = kFailedScore;

  for (int t = 0;; ++t) {
    auto scores = score_candidates(pool, target, ctx);
    std::vector<double> sims(scores.size());
    IterationRecord rec;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      sims[i] = scores[i].similarity;
      rec.similarities.push_back(scores[i].failed ? std::nullopt
                                                  : std::optional<double>(scores[i].similarity));
    }
    const std::size_t idx = select_best(sims);
    const double pool_best = sims[idx];
    if (t == 0) {
      if (scores[idx].failed) throw Error("run_refinement: every base candidate failed to score");
      trace.base_similarity = scores[0].failed ? kFailedScore : sims[0];
    }
    const double previous = t == 0 ? trace.base_similarity : best;

    rec.candidates = pool;
    rec.selected_index = idx;
    rec.pool_best = pool_best;
    if (pool_best >= best && !scores[idx].failed) {
      incumbent = pool.candidates[idx].text;
      best = pool_best;
    } else {
      rec.kept_previous = true;
    }
    rec.selected_similarity = best;
    rec.hypothesis = incumbent;
    trace.iterations.push_back(std::move(rec));

    const StopCheck check = should_stop(pool_best, previous, cfg.epsilon, t + 1, cfg.max_iterations);
    if (check.decision == Decision::Stop) {
      if (pool_best - previous < cfg.epsilon) {
        trace.stop_reason = check.degraded ? StopReason::Degraded : StopReason::Converged;
      } else {
        trace.stop_reason = StopReason::MaxIterations;
      }
      break;
    }

    try {
      Target hyp = embed_prompt(incumbent, ctx);
      pool = inverter.invert_embedding(hyp.embedding, cfg.beam_width);
    } catch (const std::exception& e) {
      trace.stop_reason = StopReason::InverterFailed;
      trace.error = e.what();
      break;
    }
    pool.iteration = t + 1;
    if (cfg.include_base_in_pool) {
      const std::string key = backend::candidate_key(incumbent);
      bool present = false;
      for (const auto& c : pool.candidates) present = present || backend::candidate_key(c.text) == key;
      if (!present) pool.candidates.push_back(backend::Candidate{incumbent, best});
    }
  }

  trace.final_prompt = incumbent;
  trace.final_similarity = best;
  return trace;
}

AttackResult attack(const backend::ModelBackend& victim, const backend::ModelBackend& inverter,
                    const logits::LogitMatrix& target_logits,
                    const logits::ProjectionWeights& projection, const RefinementConfig& cfg,
                    const AttackOptions& options) {
  cfg.validate();
  ScoringContext ctx;
  ctx.victim = &victim;
  ctx.projection = &projection;
  ctx.inverter_vocab = inverter.vocab();
  ctx.filter = target_logits.filter;
  ctx.reduction = options.reduction;
  ctx.space = cfg.space;

  auto filtered = staged("filter", [&] {
    target_logits.validate();
    return logits::apply_filters(target_logits);
  });
  auto aligned = staged("align", [&] {
    return logits::align_vocab(filtered, ctx.inverter_vocab, ctx.reduction);
  });
  Target target;
  target.embedding = staged("project", [&] { return logits::project(aligned, projection); });
  target.aligned = aligned.values;

  auto base = staged("invert", [&] { return inverter.invert_embedding(target.embedding, cfg.beam_width); });
  auto trace = staged("refine", [&] { return run_refinement(target, base, inverter, ctx, cfg); });

  AttackResult r;
  r.base_prompt = base.candidates.front().text;
  r.reconstructed_prompt = trace.final_prompt;
  r.segments = metrics::segment_prompt(r.reconstructed_prompt);
  r.target_similarity_of_base = trace.base_similarity;
  r.final_similarity = trace.final_similarity;
  r.trace = std::move(trace);
  return r;
}

}  // namespace recinv::refine
