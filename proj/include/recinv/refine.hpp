#pragma once

// Similarity-guided refinement: score beam candidates through the victim,
// keep the closest one, re-invert from it, and stop once the gain drops
// below epsilon.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "recinv/backend.hpp"
#include "recinv/logits.hpp"
#include "recinv/metrics.hpp"

namespace recinv::refine {

using Json = nlohmann::json;

enum class SimilaritySpace { Embedding, Logits };

struct RefinementConfig {
  int beam_width = 5;
  double epsilon = 1e-5;
  int max_iterations = 8;
  /// Carry the current hypothesis into every later candidate pool.
  bool include_base_in_pool = true;
  SimilaritySpace space = SimilaritySpace::Embedding;

  void validate() const;
};

struct Similarity {
  double value = 0.0;
  bool degenerate = false;  // a zero vector was involved; value is 0
};

/// a.b / (|a||b|). Throws on length mismatch.
Similarity cosine_similarity(std::span<const double> a, std::span<const double> b);

/// How candidate prompts are mapped into the space of the target.
struct ScoringContext {
  const backend::ModelBackend* victim = nullptr;
  const logits::ProjectionWeights* projection = nullptr;
  std::vector<std::string> inverter_vocab;
  logits::FilterMeta filter;
  logits::RowReduction reduction = logits::RowReduction::Last;
  SimilaritySpace space = SimilaritySpace::Embedding;
};

struct Target {
  logits::ProjectedEmbedding embedding;
  std::vector<double> aligned;  // h, used for logit-space similarity
};

/// filters -> align -> project applied to a logit matrix.
Target embed_logits(const logits::LogitMatrix& z, const ScoringContext& ctx);

/// Queries the victim and embeds its logits.
Target embed_prompt(std::string_view prompt, const ScoringContext& ctx);

struct CandidateScore {
  double similarity = 0.0;
  bool failed = false;
  bool degenerate = false;
  std::string error;
};

/// One score per candidate, in candidate order. A backend failure marks that
/// candidate failed instead of aborting.
std::vector<CandidateScore> score_candidates(const backend::CandidateSet& candidates,
                                             const Target& target, const ScoringContext& ctx);

/// Index of the maximum; the lowest index wins ties. Throws on an empty list.
std::size_t select_best(std::span<const double> similarities);

enum class Decision { Continue, Stop };

struct StopCheck {
  Decision decision = Decision::Continue;
  bool degraded = false;  // the newest similarity is below the previous one
  bool capped = false;    // iteration reached max_iterations
};

StopCheck should_stop(double current, double previous, double epsilon, int iteration,
                      int max_iterations);

enum class StopReason { Converged, MaxIterations, Degraded, InverterFailed };
std::string_view to_string(StopReason r);

struct IterationRecord {
  backend::CandidateSet candidates;
  std::vector<std::optional<double>> similarities;  // nullopt for failed candidates
  std::size_t selected_index = 0;
  double pool_best = 0.0;
  double selected_similarity = 0.0;  // best so far; non-decreasing
  std::string hypothesis;
  bool kept_previous = false;  // the pool did not beat the incumbent
};

struct RefinementTrace {
  std::vector<IterationRecord> iterations;
  std::string final_prompt;
  double final_similarity = 0.0;
  double base_similarity = 0.0;
  StopReason stop_reason = StopReason::Converged;
  std::optional<std::string> error;

  Json to_json() const;
};

/// Iteration 0 scores the base candidate set; its top entry is the base
/// prompt and provides the "previous" similarity for the first stop check.
/// Later pools come from inverting the embedding of the incumbent's victim
/// logits.
RefinementTrace run_refinement(const Target& target, const backend::CandidateSet& base,
                               const backend::ModelBackend& inverter, const ScoringContext& ctx,
                               const RefinementConfig& cfg);

struct AttackResult {
  std::string reconstructed_prompt;
  metrics::PromptSegments segments;
  std::string base_prompt;
  RefinementTrace trace;
  double target_similarity_of_base = 0.0;
  double final_similarity = 0.0;
};

struct AttackOptions {
  logits::RowReduction reduction = logits::RowReduction::Last;
};

/// apply_filters -> align_vocab -> project -> invert_embedding -> run_refinement.
/// Errors are rethrown with the failing stage in the message.
AttackResult attack(const backend::ModelBackend& victim, const backend::ModelBackend& inverter,
                    const logits::LogitMatrix& target_logits,
                    const logits::ProjectionWeights& projection, const RefinementConfig& cfg,
                    const AttackOptions& options = {});

}  // namespace recinv::refine
