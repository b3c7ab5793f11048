#pragma once

// Reconstruction quality and privacy leakage: ItemMatch, ProfileMatch,
// BLEU, ROUGE-L and token F1, plus positional and item-count breakdowns.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "recinv/corpus.hpp"

namespace recinv::metrics {

using Json = nlohmann::json;

struct TitleExtraction {
  std::vector<std::string> titles;  // normalized, first occurrence kept
  bool unbalanced_quotes = false;
};

/// Double-quoted spans in order. An unmatched trailing quote is ignored and flagged.
TitleExtraction extract_titles(std::string_view prompt);

struct ProfileExtraction {
  std::optional<corpus::Profile> profile;
  bool malformed = false;
};

/// Parses "The user is a <age>-year-old <gender>." case-insensitively.
ProfileExtraction extract_profile(std::string_view prompt);

struct ExtractionResult {
  std::vector<std::string> titles;
  std::optional<corpus::Profile> profile;
  bool eligible_for_profile = false;
  bool unbalanced_quotes = false;
  bool malformed_profile = false;
};

ExtractionResult extract(std::string_view prompt);

/// Free-text segmentation of a reconstructed prompt by sentence: the profile
/// phrase, sentences quoting titles (history), the first other sentence
/// (task instruction), and the rest (context).
struct PromptSegments {
  std::string task;
  std::string context;
  std::string profile;
  std::string history;

  Json to_json() const;
};

PromptSegments segment_prompt(std::string_view prompt);

/// |T intersect T^| / |T| over normalized title sets; nullopt for an empty reference.
std::optional<double> item_match(std::span<const std::string> reference,
                                 std::span<const std::string> reconstructed);

struct ProfilePair {
  corpus::Profile reference;
  std::optional<corpus::Profile> extracted;
};

/// N_correct / N_total; both age and gender must match exactly. nullopt when empty.
std::optional<double> profile_match(std::span<const ProfilePair> batch);

/// Sentence BLEU-4, uniform weights, exponential (NIST) smoothing, effective
/// order, brevity penalty; whitespace tokens of NFC text; 0..100.
double bleu(std::string_view reference, std::string_view hypothesis);

/// LCS F-measure with beta = 1; 0 when either side is empty.
double rouge_l(std::string_view reference, std::string_view hypothesis);

/// Multiset token overlap F1; 0 when there is no overlap.
double token_f1(std::string_view reference, std::string_view hypothesis);

inline constexpr std::string_view kBleuVariant =
    "sentence-bleu4/uniform/exp-smoothing/effective-order/whitespace-nfc";

/// rate[p] = share of samples with more than p titles whose p-th title was recovered.
std::vector<double> positional_item_match(std::span<const corpus::InstructionSample> samples,
                                          std::span<const ExtractionResult> extractions);

struct SampleScore {
  std::string sample_id;
  int n_items = 0;
  std::optional<double> item_match;
  std::optional<bool> profile_match_hit;
  double bleu = 0.0;
  double rouge_l = 0.0;
  double token_f1 = 0.0;
};

struct MetricMeans {
  std::size_t count = 0;
  std::optional<double> item_match;
  std::optional<double> profile_match;
  double bleu = 0.0;
  double rouge_l = 0.0;
  double token_f1 = 0.0;

  Json to_json() const;
};

struct EvalReport {
  std::vector<SampleScore> per_sample;
  MetricMeans aggregates;  // aggregates.profile_match is N_correct / N_total
  std::size_t profile_total = 0;
  std::size_t profile_correct = 0;
  std::vector<double> positional;
  std::map<int, MetricMeans> by_item_count;
  std::size_t excluded_empty_reference = 0;

  Json to_json() const;
  std::string per_sample_csv() const;
  std::string positional_csv() const;
  std::string by_item_count_csv() const;
};

struct EvalPair {
  const corpus::InstructionSample* sample = nullptr;
  std::string reconstructed;
};

EvalReport evaluate(std::span<const EvalPair> pairs);

}  // namespace recinv::metrics
