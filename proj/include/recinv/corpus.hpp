#pragma once

// Instruction-dataset construction from public rating dumps.
//
// Pipeline: load_ratings -> build_histories -> ensure_demographics ->
// split_by_threshold -> render_prompt, driven per user by synthesize_dataset.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "recinv/util/rng.hpp"

namespace recinv::corpus {

using Json = nlohmann::json;

enum class Gender { Male, Female };

std::string_view to_string(Gender g);
/// Accepts male/female/m/f in any case.
std::optional<Gender> parse_gender(std::string_view text);

struct RatingRecord {
  std::string user_id;
  std::string item_id;
  std::string item_title;
  double rating = 0.0;
  std::optional<std::int64_t> timestamp;
  std::optional<int> age;
  std::optional<Gender> gender;
};

/// Maps RatingRecord fields onto the header names of a delimited dump.
struct ColumnMapping {
  std::string user_id = "userId";
  std::string item_id = "itemId";
  std::string item_title = "title";
  std::string rating = "rating";
  std::optional<std::string> timestamp = "timestamp";
  std::optional<std::string> age;
  std::optional<std::string> gender;
  /// 0 selects by extension: '\t' for .tsv, ',' otherwise.
  char delimiter = 0;

  static ColumnMapping from_json(const Json& j);
  Json to_json() const;
};

struct LoadResult {
  std::vector<RatingRecord> records;
  std::size_t rows = 0;
  std::size_t dropped = 0;
};

/// Titles are NFC-normalized, whitespace-collapsed and have '"' replaced by '\''
/// so that rendered titles can be delimited by double quotes.
/// Optional mapped columns that are absent from the header are ignored.
LoadResult load_ratings(const std::filesystem::path& path, const ColumnMapping& schema);

/// Parse delimited text already in memory; `origin` names it in error messages.
LoadResult parse_ratings(std::string_view text, const ColumnMapping& schema, char delimiter,
                         std::string_view origin = "<memory>");

std::string canonical_title(std::string_view raw);

enum class DemographicsSource { Recorded, Synthetic };

struct Profile {
  int age = 0;
  Gender gender = Gender::Male;
  friend bool operator==(const Profile&, const Profile&) = default;
};

struct Demographics {
  Profile profile;
  DemographicsSource source = DemographicsSource::Recorded;
};

struct UserHistory {
  std::string user_id;
  std::vector<RatingRecord> records;  // newest first
  std::optional<Demographics> demographics;
};

inline constexpr int kMinSyntheticAge = 18;
inline constexpr int kMaxSyntheticAge = 65;

/// Groups by user_id (histories in ascending user_id order). Within a user,
/// timestamped records come first, newest first; untimestamped ones follow in
/// input order. Demographics are recorded only when some record carries both
/// age and gender.
std::vector<UserHistory> build_histories(std::span<const RatingRecord> records);

UserHistory ensure_demographics(UserHistory history, util::Rng& rng);

struct ThresholdSplit {
  std::vector<RatingRecord> preferred;     // rating >= k
  std::vector<RatingRecord> nonpreferred;  // rating < k
};

ThresholdSplit split_by_threshold(const UserHistory& history, double k);

enum class TaskType { BinaryClassification, Direct, Sequential, RatingPrediction, ColdStart };

inline constexpr TaskType kAllTasks[] = {TaskType::BinaryClassification, TaskType::Direct,
                                         TaskType::Sequential, TaskType::RatingPrediction,
                                         TaskType::ColdStart};

std::string_view to_string(TaskType t);
/// Throws Error("unknown task: ...").
TaskType parse_task(std::string_view name);

/// The fixed demographic phrase; templates carrying demographics must contain it.
inline constexpr std::string_view kProfilePhrase = "The user is a {age}-year-old {gender}.";

inline constexpr std::string_view kPlaceholders[] = {"age", "gender", "liked_items",
                                                     "disliked_items", "target_item"};

struct PromptTemplate {
  std::string template_id;
  TaskType task_type = TaskType::Direct;
  std::string body;

  bool uses(std::string_view placeholder) const;
  bool has_profile() const { return uses("age") || uses("gender"); }
};

/// Placeholder names appearing in a body, in order of first appearance.
std::vector<std::string> placeholders(std::string_view body);

/// Throws on unknown placeholders, unbalanced braces, or a demographic
/// placeholder outside the fixed phrase.
void validate_template(const PromptTemplate& t);

std::vector<PromptTemplate> parse_registry(const Json& j);
std::vector<PromptTemplate> load_registry(const std::filesystem::path& path);
Json registry_to_json(std::span<const PromptTemplate> registry);
/// SHA-256 of the registry's compact canonical JSON.
std::string registry_digest(std::span<const PromptTemplate> registry);

enum class SegmentRole { TaskInstruction, Context, Profile, ItemHistory };
std::string_view to_string(SegmentRole r);
SegmentRole parse_segment_role(std::string_view name);

struct Segment {
  SegmentRole role = SegmentRole::Context;
  std::string text;
  friend bool operator==(const Segment&, const Segment&) = default;
};

struct InstructionSample {
  std::string sample_id;
  std::string user_id;
  TaskType task_type = TaskType::Direct;
  std::string template_id;
  std::string prompt;
  std::vector<Segment> segments;  // concatenation equals prompt
  std::vector<std::string> ground_truth_titles;
  Profile profile;
  bool has_profile = false;  // phrase rendered; ProfileMatch-eligible
  int n_items = 0;

  /// Concatenated text of all segments with the given role.
  std::string segment_text(SegmentRole role) const;

  Json to_json() const;
  static InstructionSample from_json(const Json& j);
};

enum class SkipReason { NoLikedItems, NoDislikedItems, NoTargetItem, NoDemographics, ItemBudget };
std::string_view to_string(SkipReason r);

struct RenderRequest {
  const PromptTemplate& tmpl;
  const UserHistory& history;
  std::span<const RatingRecord> preferred;
  std::span<const RatingRecord> nonpreferred;
  int n = 0;  // title budget, target item included
  std::optional<std::string> target_item;
};

struct RenderOutcome {
  std::optional<InstructionSample> sample;
  std::optional<SkipReason> skipped;
};

/// Substitutes placeholders. Titles render as "A", "B" and are capped at n in
/// total; when both lists appear they are filled alternately. Duplicate titles
/// (and the target) are never rendered twice.
RenderOutcome render_prompt(const RenderRequest& req);

enum class ItemSampling { Recency, Random };

struct SynthesisConfig {
  double rating_threshold_k = 4.0;
  int n_lo = 3;
  int n_hi = 11;  // exclusive
  std::uint64_t master_seed = 42;
  std::vector<TaskType> tasks{std::begin(kAllTasks), std::end(kAllTasks)};
  ItemSampling item_sampling = ItemSampling::Recency;
  double rating_min = 0.0;
  double rating_max = 5.0;
  std::size_t workers = 1;

  void validate() const;
};

struct SynthesisResult {
  std::vector<InstructionSample> samples;
  std::size_t users = 0;
  std::size_t skipped = 0;
  std::map<std::string, std::size_t> skip_reasons;
};

/// One sample per (user, configured task) in ascending user_id order, tasks in
/// canonical order. All randomness for a user comes from
/// Rng(substream_seed(master_seed, user_id)), so output is independent of
/// worker count.
SynthesisResult synthesize_dataset(std::span<const UserHistory> histories,
                                   const SynthesisConfig& config,
                                   std::span<const PromptTemplate> registry);

std::string to_jsonl(std::span<const InstructionSample> samples);
std::vector<InstructionSample> load_dataset(const std::filesystem::path& path);

/// Sidecar manifest: seed, k, n range, registry digest and counts.
Json dataset_manifest(const SynthesisConfig& config, std::span<const PromptTemplate> registry,
                      const SynthesisResult& result);

}  // namespace recinv::corpus
