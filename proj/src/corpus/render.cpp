#include <algorithm>
#include <unordered_set>

#include "recinv/corpus.hpp"
#include "recinv/error.hpp"

namespace recinv::corpus {
namespace {

// Split a template body into sentence pieces. A piece ends after '.', '?' or
// '!' plus any following spaces, so the pieces concatenate back to the body.
std::vector<std::string> sentence_pieces(std::string_view body) {
  std::vector<std::string> pieces;
  std::size_t start = 0;
  for (std::size_t i = 0; i < body.size(); ++i) {
    char c = body[i];
    if ((c == '.' || c == '?' || c == '!') && i + 1 < body.size() && body[i + 1] == ' ') {
      std::size_t end = i + 1;
      while (end < body.size() && body[end] == ' ') ++end;
      pieces.emplace_back(body.substr(start, end - start));
      start = end;
      i = end - 1;
    }
  }
  if (start < body.size()) pieces.emplace_back(body.substr(start));
  return pieces;
}

SegmentRole classify(std::string_view piece, bool& seen_instruction) {
  auto has = [&](std::string_view p) { return piece.find(p) != std::string_view::npos; };
  if (has("{age}") || has("{gender}")) return SegmentRole::Profile;
  if (has("{liked_items}") || has("{disliked_items}")) return SegmentRole::ItemHistory;
  if (has("{target_item}")) return SegmentRole::Context;
  if (!seen_instruction) {
    seen_instruction = true;
    return SegmentRole::TaskInstruction;
  }
  return SegmentRole::Context;
}

std::string quoted_list(const std::vector<std::string>& titles) {
  std::string out;
  for (std::size_t i = 0; i < titles.size(); ++i) {
    if (i) out += ", ";
    out += '"';
    out += titles[i];
    out += '"';
  }
  return out;
}

struct Substitutions {
  std::string age;
  std::string gender;
  std::vector<std::string> liked;
  std::vector<std::string> disliked;
  std::optional<std::string> target;
};

// Replace placeholders in one piece; titles are appended to `order` as rendered.
std::string substitute(std::string_view piece, const Substitutions& subs,
                       std::vector<std::string>& order) {
  std::string out;
  std::size_t i = 0;
  while (i < piece.size()) {
    if (piece[i] != '{') {
      out.push_back(piece[i++]);
      continue;
    }
    auto close = piece.find('}', i);
    std::string_view name = piece.substr(i + 1, close - i - 1);
    if (name == "age") {
      out += subs.age;
    } else if (name == "gender") {
      out += subs.gender;
    } else if (name == "liked_items") {
      out += quoted_list(subs.liked);
      order.insert(order.end(), subs.liked.begin(), subs.liked.end());
    } else if (name == "disliked_items") {
      out += quoted_list(subs.disliked);
      order.insert(order.end(), subs.disliked.begin(), subs.disliked.end());
    } else if (name == "target_item") {
      out += '"' + *subs.target + '"';
      order.push_back(*subs.target);
    }
    i = close + 1;
  }
  return out;
}

}  // namespace

RenderOutcome render_prompt(const RenderRequest& req) {
  const PromptTemplate& t = req.tmpl;
  RenderOutcome outcome;
  auto skip = [&](SkipReason r) {
    outcome.skipped = r;
    return outcome;
  };

  const bool wants_liked = t.uses("liked_items");
  const bool wants_disliked = t.uses("disliked_items");
  const bool wants_target = t.uses("target_item");

  if (t.has_profile() && !req.history.demographics) return skip(SkipReason::NoDemographics);
  if (wants_target && !req.target_item) return skip(SkipReason::NoTargetItem);
  const int required = (wants_liked ? 1 : 0) + (wants_disliked ? 1 : 0) + (wants_target ? 1 : 0);
  if (req.n < required) return skip(SkipReason::ItemBudget);

  Substitutions subs;
  std::unordered_set<std::string> used;
  if (wants_target) {
    subs.target = *req.target_item;
    used.insert(*req.target_item);
  }

  int budget = req.n - (wants_target ? 1 : 0);
  std::size_t li = 0, di = 0;
  auto take_next = [&](std::span<const RatingRecord> pool, std::size_t& cursor,
                       std::vector<std::string>& dst) {
    while (cursor < pool.size()) {
      const std::string& title = pool[cursor++].item_title;
      if (used.insert(title).second) {
        dst.push_back(title);
        --budget;
        return true;
      }
    }
    return false;
  };
  while (budget > 0) {
    bool progressed = false;
    if (wants_liked && take_next(req.preferred, li, subs.liked)) progressed = true;
    if (budget > 0 && wants_disliked && take_next(req.nonpreferred, di, subs.disliked)) {
      progressed = true;
    }
    if (!progressed) break;
  }
  if (wants_liked && subs.liked.empty()) return skip(SkipReason::NoLikedItems);
  if (wants_disliked && subs.disliked.empty()) return skip(SkipReason::NoDislikedItems);

  InstructionSample s;
  s.user_id = req.history.user_id;
  s.task_type = t.task_type;
  s.template_id = t.template_id;
  if (req.history.demographics) s.profile = req.history.demographics->profile;
  s.has_profile = t.has_profile();
  subs.age = std::to_string(s.profile.age);
  subs.gender = std::string(to_string(s.profile.gender));

  bool seen_instruction = false;
  std::vector<std::string> order;
  for (const auto& piece : sentence_pieces(t.body)) {
    SegmentRole role = classify(piece, seen_instruction);
    std::string text = substitute(piece, subs, order);
    s.prompt += text;
    if (!s.segments.empty() && s.segments.back().role == role) {
      s.segments.back().text += text;
    } else {
      s.segments.push_back(Segment{role, std::move(text)});
    }
  }
  std::unordered_set<std::string> seen;
  for (auto& title : order) {
    if (seen.insert(title).second) s.ground_truth_titles.push_back(std::move(title));
  }
  s.n_items = static_cast<int>(s.ground_truth_titles.size());
  outcome.sample = std::move(s);
  return outcome;
}

std::string InstructionSample::segment_text(SegmentRole role) const {
  std::string out;
  for (const auto& seg : segments) {
    if (seg.role == role) out += seg.text;
  }
  return out;
}

Json InstructionSample::to_json() const {
  Json segs = Json::array();
  for (const auto& seg : segments) {
    segs.push_back({{"role", std::string(to_string(seg.role))}, {"text", seg.text}});
  }
  return Json{{"sample_id", sample_id},
              {"user_id", user_id},
              {"task_type", std::string(to_string(task_type))},
              {"template_id", template_id},
              {"prompt", prompt},
              {"segments", segs},
              {"ground_truth_titles", ground_truth_titles},
              {"profile", {{"age", profile.age}, {"gender", std::string(to_string(profile.gender))}}},
              {"has_profile", has_profile},
              {"n_items", n_items}};
}

InstructionSample InstructionSample::from_json(const Json& j) {
  InstructionSample s;
  s.sample_id = j.at("sample_id").get<std::string>();
  s.user_id = j.value("user_id", "");
  s.task_type = parse_task(j.at("task_type").get<std::string>());
  s.template_id = j.value("template_id", "");
  s.prompt = j.at("prompt").get<std::string>();
  if (j.contains("segments")) {
    for (const auto& seg : j.at("segments")) {
      s.segments.push_back(Segment{parse_segment_role(seg.at("role").get<std::string>()),
                                   seg.at("text").get<std::string>()});
    }
  }
  s.ground_truth_titles = j.at("ground_truth_titles").get<std::vector<std::string>>();
  if (j.contains("profile")) {
    const auto& p = j.at("profile");
    s.profile.age = p.at("age").get<int>();
    auto g = parse_gender(p.at("gender").get<std::string>());
    if (!g) throw Error("sample " + s.sample_id + ": bad gender");
    s.profile.gender = *g;
  }
  s.has_profile = j.value("has_profile", false);
  s.n_items = j.value("n_items", static_cast<int>(s.ground_truth_titles.size()));
  return s;
}

}  // namespace recinv::corpus
