#include <algorithm>

#include "recinv/corpus.hpp"
#include "recinv/error.hpp"
#include "recinv/util/digest.hpp"
#include "recinv/util/io.hpp"
#include "recinv/util/text.hpp"

namespace recinv::corpus {
namespace {

std::size_t count_occurrences(std::string_view hay, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string_view::npos;
       pos = hay.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

}  // namespace

std::string_view to_string(TaskType t) {
  switch (t) {
    case TaskType::BinaryClassification: return "binary";
    case TaskType::Direct: return "direct";
    case TaskType::Sequential: return "sequential";
    case TaskType::RatingPrediction: return "rating";
    case TaskType::ColdStart: return "cold_start";
  }
  return "direct";
}

TaskType parse_task(std::string_view name) {
  std::string n = util::to_lower_ascii(util::trim(name));
  std::replace(n.begin(), n.end(), '-', '_');
  if (n == "binary" || n == "binary_classification") return TaskType::BinaryClassification;
  if (n == "direct") return TaskType::Direct;
  if (n == "sequential") return TaskType::Sequential;
  if (n == "rating" || n == "rating_prediction") return TaskType::RatingPrediction;
  if (n == "cold_start" || n == "coldstart") return TaskType::ColdStart;
  throw Error("unknown task: " + std::string(name));
}

std::string_view to_string(SegmentRole r) {
  switch (r) {
    case SegmentRole::TaskInstruction: return "task_instruction";
    case SegmentRole::Context: return "context";
    case SegmentRole::Profile: return "profile";
    case SegmentRole::ItemHistory: return "item_history";
  }
  return "context";
}

SegmentRole parse_segment_role(std::string_view name) {
  if (name == "task_instruction") return SegmentRole::TaskInstruction;
  if (name == "context") return SegmentRole::Context;
  if (name == "profile") return SegmentRole::Profile;
  if (name == "item_history") return SegmentRole::ItemHistory;
  throw Error("unknown segment role: " + std::string(name));
}

std::string_view to_string(SkipReason r) {
  switch (r) {
    case SkipReason::NoLikedItems: return "no_liked_items";
    case SkipReason::NoDislikedItems: return "no_disliked_items";
    case SkipReason::NoTargetItem: return "no_target_item";
    case SkipReason::NoDemographics: return "no_demographics";
    case SkipReason::ItemBudget: return "item_budget";
  }
  return "unknown";
}

bool PromptTemplate::uses(std::string_view placeholder) const {
  std::string token = "{" + std::string(placeholder) + "}";
  return body.find(token) != std::string::npos;
}

std::vector<std::string> placeholders(std::string_view body) {
  std::vector<std::string> names;
  std::size_t i = 0;
  while (i < body.size()) {
    char c = body[i];
    if (c == '}') throw Error("template: unbalanced '}' at offset " + std::to_string(i));
    if (c != '{') {
      ++i;
      continue;
    }
    auto close = body.find('}', i + 1);
    auto reopen = body.find('{', i + 1);
    if (close == std::string_view::npos || (reopen != std::string_view::npos && reopen < close)) {
      throw Error("template: unbalanced '{' at offset " + std::to_string(i));
    }
    std::string name(body.substr(i + 1, close - i - 1));
    if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
    i = close + 1;
  }
  return names;
}

void validate_template(const PromptTemplate& t) {
  const std::string where = "template '" + t.template_id + "': ";
  if (t.template_id.empty()) throw Error("template: empty template_id");
  std::vector<std::string> names;
  try {
    names = placeholders(t.body);
  } catch (const Error& e) {
    throw Error(where + e.what());
  }
  for (const auto& n : names) {
    if (std::find(std::begin(kPlaceholders), std::end(kPlaceholders), n) ==
        std::end(kPlaceholders)) {
      throw Error(where + "unknown placeholder {" + n + "}");
    }
  }
  if (t.has_profile()) {
    if (count_occurrences(t.body, kProfilePhrase) != 1 ||
        count_occurrences(t.body, "{age}") != 1 || count_occurrences(t.body, "{gender}") != 1) {
      throw Error(where + "demographics must appear exactly once, as \"" +
                  std::string(kProfilePhrase) + "\"");
    }
  }
  if (t.body.find('"') != std::string::npos) {
    throw Error(where + "literal double quotes are reserved for item titles");
  }
}

std::vector<PromptTemplate> parse_registry(const Json& j) {
  const Json& list = j.is_object() && j.contains("templates") ? j.at("templates") : j;
  if (!list.is_array()) throw Error("template registry: expected an array of templates");
  std::vector<PromptTemplate> out;
  for (const auto& item : list) {
    PromptTemplate t;
    t.template_id = item.at("template_id").get<std::string>();
    t.task_type = parse_task(item.at("task_type").get<std::string>());
    t.body = item.at("body").get<std::string>();
    validate_template(t);
    for (const auto& prev : out) {
      if (prev.template_id == t.template_id) {
        throw Error("template registry: duplicate template_id '" + t.template_id + "'");
      }
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<PromptTemplate> load_registry(const std::filesystem::path& path) {
  return parse_registry(util::read_json(path));
}

Json registry_to_json(std::span<const PromptTemplate> registry) {
  Json list = Json::array();
  for (const auto& t : registry) {
    list.push_back({{"template_id", t.template_id},
                    {"task_type", std::string(to_string(t.task_type))},
                    {"body", t.body}});
  }
  return Json{{"templates", list}};
}

std::string registry_digest(std::span<const PromptTemplate> registry) {
  return util::sha256_hex(registry_to_json(registry).dump());
}

}  // namespace recinv::corpus
