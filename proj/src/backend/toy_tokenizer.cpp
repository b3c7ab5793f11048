#include <algorithm>
#include <set>
#include <unordered_map>

#include "recinv/backend.hpp"
#include "recinv/error.hpp"
#include "recinv/util/text.hpp"

namespace recinv::backend {
namespace {

bool is_punct(char c) {
  return c == ',' || c == '.' || c == ':' || c == ';' || c == '?' || c == '!';
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

}  // namespace

std::string candidate_key(std::string_view text) { return util::normalize(text); }

Json CandidateSet::to_json() const {
  Json list = Json::array();
  for (const auto& c : candidates) list.push_back({{"text", c.text}, {"score", c.score}});
  return Json{{"candidates", list}, {"iteration", iteration}};
}

CandidateSet CandidateSet::from_json(const Json& j) {
  CandidateSet set;
  for (const auto& c : j.at("candidates")) {
    set.candidates.push_back(Candidate{c.at("text").get<std::string>(), c.at("score").get<double>()});
  }
  set.iteration = j.value("iteration", 0);
  return set;
}

logits::LogitMatrix ModelBackend::query_logits(std::string_view prompt) const {
  if (!capabilities().query_logits) {
    throw Error("backend '" + name() + "' does not provide query_logits");
  }
  return do_query_logits(prompt);
}

CandidateSet ModelBackend::invert_embedding(const logits::ProjectedEmbedding& e,
                                            int beam_width) const {
  if (beam_width < 1) throw Error("invert_embedding: beam width must be >= 1");
  if (!capabilities().invert_embedding) {
    throw Error("backend '" + name() + "' does not provide invert_embedding");
  }
  CandidateSet set = do_invert_embedding(e, beam_width);
  if (set.candidates.empty()) throw Error("backend '" + name() + "' returned no candidates");
  if (set.candidates.size() > static_cast<std::size_t>(beam_width)) {
    set.candidates.resize(static_cast<std::size_t>(beam_width));
  }
  return set;
}

logits::LogitMatrix ModelBackend::do_query_logits(std::string_view) const {
  throw Error("backend '" + name() + "' does not provide query_logits");
}

CandidateSet ModelBackend::do_invert_embedding(const logits::ProjectedEmbedding&, int) const {
  throw Error("backend '" + name() + "' does not provide invert_embedding");
}

std::vector<std::string> toy_tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (is_space(c)) {
      ++i;
    } else if (c == '"') {
      auto close = text.find('"', i + 1);
      if (close == std::string_view::npos) close = text.size() - 1;
      tokens.emplace_back(text.substr(i, close - i + 1));
      i = close + 1;
    } else if (is_punct(c)) {
      tokens.emplace_back(1, c);
      ++i;
    } else {
      std::size_t j = i;
      while (j < text.size() && !is_space(text[j]) && !is_punct(text[j]) && text[j] != '"') ++j;
      tokens.emplace_back(text.substr(i, j - i));
      i = j;
    }
  }
  return tokens;
}

std::string toy_detokenize(std::span<const std::string> tokens) {
  std::string out;
  for (const auto& t : tokens) {
    const bool punct = t.size() == 1 && is_punct(t[0]);
    if (!out.empty() && !punct) out.push_back(' ');
    out += t;
  }
  return out;
}

std::vector<std::string> build_toy_vocab(std::span<const std::string> texts) {
  std::set<std::string> uniq;
  for (const auto& t : texts) {
    for (auto& tok : toy_tokenize(t)) uniq.insert(std::move(tok));
  }
  return {uniq.begin(), uniq.end()};
}

TokenizedText tokenize(std::span<const std::string> vocab, std::string_view text) {
  std::unordered_map<std::string_view, int> index;
  for (std::size_t i = 0; i < vocab.size(); ++i) index.emplace(vocab[i], static_cast<int>(i));
  TokenizedText out;
  out.text = std::string(text);
  for (const auto& tok : toy_tokenize(text)) {
    auto it = index.find(tok);
    if (it == index.end()) throw Error("tokenize: token '" + tok + "' is not in the vocabulary");
    out.tokens.push_back(it->second);
  }
  return out;
}

}  // namespace recinv::backend
