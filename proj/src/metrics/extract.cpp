#include <cctype>
#include <charconv>
#include <unordered_set>

#include "recinv/metrics.hpp"
#include "recinv/util/text.hpp"

namespace recinv::metrics {
namespace {

constexpr std::string_view kProfileLead = "the user is a ";

// Sentence pieces of free text, split after . ? ! followed by a space, never
// inside a quoted span.
std::vector<std::string> sentences(std::string_view text) {
  std::vector<std::string> out;
  bool quoted = false;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c == '"') quoted = !quoted;
    if (quoted) continue;
    if ((c == '.' || c == '?' || c == '!') && i + 1 < text.size() && text[i + 1] == ' ') {
      std::size_t end = i + 1;
      while (end < text.size() && text[end] == ' ') ++end;
      out.emplace_back(text.substr(start, end - start));
      start = end;
      i = end - 1;
    }
  }
  if (start < text.size()) out.emplace_back(text.substr(start));
  return out;
}

}  // namespace

TitleExtraction extract_titles(std::string_view prompt) {
  TitleExtraction r;
  std::unordered_set<std::string> seen;
  std::size_t pos = 0;
  while (true) {
    std::size_t open = prompt.find('"', pos);
    if (open == std::string_view::npos) break;
    std::size_t close = prompt.find('"', open + 1);
    if (close == std::string_view::npos) {
      r.unbalanced_quotes = true;
      break;
    }
    std::string title = util::normalize(prompt.substr(open + 1, close - open - 1));
    if (!title.empty() && seen.insert(title).second) r.titles.push_back(std::move(title));
    pos = close + 1;
  }
  return r;
}

ProfileExtraction extract_profile(std::string_view prompt) {
  ProfileExtraction r;
  const std::string lower = util::to_lower_ascii(util::normalize(prompt));
  std::size_t at = lower.find(kProfileLead);
  if (at == std::string::npos) return r;
  std::string_view rest = std::string_view(lower).substr(at + kProfileLead.size());

  int age = 0;
  auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), age);
  std::string_view tail(ptr, rest.data() + rest.size() - ptr);
  constexpr std::string_view kMid = "-year-old ";
  if (ec != std::errc() || ptr == rest.data() || !tail.starts_with(kMid)) {
    r.malformed = true;
    return r;
  }
  tail.remove_prefix(kMid.size());
  std::size_t word = 0;
  while (word < tail.size() && std::isalpha(static_cast<unsigned char>(tail[word]))) ++word;
  auto gender = corpus::parse_gender(tail.substr(0, word));
  if (!gender || word == 1) {
    r.malformed = true;
    return r;
  }
  r.profile = corpus::Profile{age, *gender};
  return r;
}

ExtractionResult extract(std::string_view prompt) {
  ExtractionResult r;
  auto titles = extract_titles(prompt);
  r.titles = std::move(titles.titles);
  r.unbalanced_quotes = titles.unbalanced_quotes;
  auto profile = extract_profile(prompt);
  r.profile = profile.profile;
  r.malformed_profile = profile.malformed;
  r.eligible_for_profile = profile.profile.has_value() || profile.malformed;
  return r;
}

Json PromptSegments::to_json() const {
  return Json{{"task", task}, {"context", context}, {"profile", profile}, {"history", history}};
}

PromptSegments segment_prompt(std::string_view prompt) {
  PromptSegments s;
  bool seen_task = false;
  for (auto& piece : sentences(prompt)) {
    const std::string lower = util::to_lower_ascii(piece);
    std::string* slot;
    if (lower.find(kProfileLead) != std::string::npos) {
      slot = &s.profile;
    } else if (piece.find('"') != std::string::npos) {
      slot = &s.history;
    } else if (!seen_task) {
      seen_task = true;
      slot = &s.task;
    } else {
      slot = &s.context;
    }
    *slot += piece;
  }
  for (auto* f : {&s.task, &s.context, &s.profile, &s.history}) *f = util::trim(*f);
  return s;
}

std::optional<double> item_match(std::span<const std::string> reference,
                                 std::span<const std::string> reconstructed) {
  std::unordered_set<std::string> ref;
  for (const auto& t : reference) ref.insert(util::normalize(t));
  if (ref.empty()) return std::nullopt;
  std::unordered_set<std::string> hit;
  for (const auto& t : reconstructed) {
    std::string k = util::normalize(t);
    if (ref.count(k)) hit.insert(std::move(k));
  }
  return static_cast<double>(hit.size()) / static_cast<double>(ref.size());
}

std::optional<double> profile_match(std::span<const ProfilePair> batch) {
  if (batch.empty()) return std::nullopt;
  std::size_t correct = 0;
  for (const auto& p : batch) {
    if (p.extracted && *p.extracted == p.reference) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(batch.size());
}

std::vector<double> positional_item_match(std::span<const corpus::InstructionSample> samples,
                                          std::span<const ExtractionResult> extractions) {
  std::size_t width = 0;
  for (const auto& s : samples) width = std::max(width, s.ground_truth_titles.size());
  std::vector<std::size_t> hits(width, 0), totals(width, 0);
  for (std::size_t i = 0; i < samples.size() && i < extractions.size(); ++i) {
    std::unordered_set<std::string> got(extractions[i].titles.begin(), extractions[i].titles.end());
    const auto& gt = samples[i].ground_truth_titles;
    for (std::size_t p = 0; p < gt.size(); ++p) {
      ++totals[p];
      if (got.count(util::normalize(gt[p]))) ++hits[p];
    }
  }
  std::vector<double> rate(width, 0.0);
  for (std::size_t p = 0; p < width; ++p) {
    if (totals[p]) rate[p] = static_cast<double>(hits[p]) / static_cast<double>(totals[p]);
  }
  return rate;
}

}  // namespace recinv::metrics
