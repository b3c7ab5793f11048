#pragma once

// Victim (LLM_theta) and inverter abstractions, the deterministic toy pair,
// and the HTTP client for external model servers.

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "recinv/logits.hpp"

namespace recinv::backend {

using Json = nlohmann::json;

struct Candidate {
  std::string text;
  double score = 0.0;
};

/// Distinct candidate prompts, best first.
struct CandidateSet {
  std::vector<Candidate> candidates;
  int iteration = 0;

  std::size_t size() const { return candidates.size(); }
  Json to_json() const;
  static CandidateSet from_json(const Json& j);
};

/// Key used for candidate distinctness: NFC text with collapsed whitespace.
std::string candidate_key(std::string_view text);

struct Capabilities {
  bool query_logits = false;
  bool invert_embedding = false;
};

class ModelBackend {
 public:
  virtual ~ModelBackend() = default;

  virtual const std::string& name() const = 0;
  virtual const std::vector<std::string>& vocab() const = 0;
  virtual Capabilities capabilities() const = 0;

  /// Next-token logits for a prompt; vocab equals this backend's vocab.
  logits::LogitMatrix query_logits(std::string_view prompt) const;

  /// Between 1 and K distinct candidates, best first. Throws for K < 1.
  CandidateSet invert_embedding(const logits::ProjectedEmbedding& e, int beam_width) const;

 protected:
  virtual logits::LogitMatrix do_query_logits(std::string_view prompt) const;
  virtual CandidateSet do_invert_embedding(const logits::ProjectedEmbedding& e,
                                           int beam_width) const;
};

// ---------------------------------------------------------------------------
// Toy tokenizer: a double-quoted span is one token, the punctuation marks
// , . : ; ? ! are single tokens, and other text splits on whitespace.
// Detokenization joins with spaces except before punctuation.

std::vector<std::string> toy_tokenize(std::string_view text);
std::string toy_detokenize(std::span<const std::string> tokens);
/// Sorted, de-duplicated token set of a corpus.
std::vector<std::string> build_toy_vocab(std::span<const std::string> texts);

struct TokenizedText {
  std::vector<int> tokens;
  std::string text;
};

/// Throws when a token is not in `vocab`.
TokenizedText tokenize(std::span<const std::string> vocab, std::string_view text);

// ---------------------------------------------------------------------------
// Toy victim: logits are a sum of seeded hash embeddings of the prompt's
// n-grams (orders 1..ngram_order), accumulated position by position.

struct ToyVictimConfig {
  std::vector<std::string> vocab;
  std::size_t feature_dim = 0;  // must equal vocab.size()
  std::uint64_t hash_seed = 1;
  int ngram_order = 2;
  /// Adds noise * (embedding under noise_seed) to every n-gram embedding. A
  /// surrogate model for an inverter that learned the victim imperfectly.
  double noise = 0.0;
  std::uint64_t noise_seed = 0;

  static ToyVictimConfig for_vocab(std::vector<std::string> vocab, std::uint64_t hash_seed,
                                   int ngram_order = 2);
  void validate() const;
};

/// Embedding of one n-gram. Component j is
///   u = splitmix64(seed + j),  value = 2 * (u >> 11) * 2^-53 - 1
/// where seed = splitmix64(fnv1a(tokens joined by 0x1F) ^ splitmix64(hash_seed)),
/// plus the noise term when configured.
std::vector<double> ngram_embedding(const ToyVictimConfig& config,
                                    std::span<const std::string> ngram);

/// One-row LogitMatrix; the empty prompt gives all zeros.
logits::LogitMatrix toy_victim_logits(const ToyVictimConfig& config, std::string_view prompt);

class ToyVictim final : public ModelBackend {
 public:
  explicit ToyVictim(ToyVictimConfig config, std::string name = "toy-victim");

  const std::string& name() const override { return name_; }
  const std::vector<std::string>& vocab() const override { return config_.vocab; }
  Capabilities capabilities() const override { return {true, false}; }
  const ToyVictimConfig& config() const { return config_; }

 protected:
  logits::LogitMatrix do_query_logits(std::string_view prompt) const override;

 private:
  ToyVictimConfig config_;
  std::string name_;
};

struct ToyInverterOptions {
  int max_length = 3;  // tokens per hypothesis
  /// Stop extending after this many steps without a new best score; 0 disables.
  int patience = 0;
};

/// Memo of projected n-gram embeddings, shared by searches that use the same
/// model config and projection. Thread-safe.
class ProjectedNgramCache;

/// Beam search over the toy vocabulary. A partial prompt scores
/// cosine(project(align(toy_victim_logits(partial))), e_target) under the
/// inverter's own config; every hypothesis that enters the beam is finished.
/// Without `cache`, a private one is used for this call.
CandidateSet toy_invert(const ToyVictimConfig& config, const logits::ProjectionWeights& projection,
                        const logits::ProjectedEmbedding& target, int beam_width,
                        const ToyInverterOptions& options = {},
                        ProjectedNgramCache* cache = nullptr);

class ToyInverter final : public ModelBackend {
 public:
  ToyInverter(ToyVictimConfig config, std::shared_ptr<const logits::ProjectionWeights> projection,
              ToyInverterOptions options = {}, std::string name = "toy-inverter");
  ToyInverter(const ToyInverter&) = delete;
  ToyInverter& operator=(const ToyInverter&) = delete;

  const std::string& name() const override { return name_; }
  const std::vector<std::string>& vocab() const override { return config_.vocab; }
  Capabilities capabilities() const override { return {false, true}; }

 protected:
  CandidateSet do_invert_embedding(const logits::ProjectedEmbedding& e,
                                   int beam_width) const override;

 private:
  ToyVictimConfig config_;
  std::shared_ptr<const logits::ProjectionWeights> projection_;
  ToyInverterOptions options_;
  std::string name_;
  std::shared_ptr<ProjectedNgramCache> cache_;
};

/// (1/|Y|) sum_t -log p(Y_t | P, Y_<t). Row t of the prompt's logits is used
/// for step t when the backend returns at least |Y| rows; otherwise the last
/// row is reused for every step.
double sequence_nll(const ModelBackend& backend, std::string_view prompt,
                    const TokenizedText& target);

// ---------------------------------------------------------------------------
// Remote backend speaking the JSON-over-HTTP wire protocol:
//   GET  /v1/vocab   -> {"vocab": [...]}
//   POST /v1/logits  {"prompt"} -> {"values": [[...]], "vocab_digest"}
//   POST /v1/invert  {"embedding": [[...]], "beam_width"} -> {"candidates": [...]}

struct RemoteOptions {
  std::chrono::milliseconds timeout{30000};
  int retries = 2;  // extra attempts after the first on timeouts and 5xx
  std::chrono::milliseconds retry_backoff{50};
  int max_in_flight = 4;
  std::optional<std::string> auth_token;  // sent as a bearer token
};

/// Environment variable holding the bearer token for remote servers.
inline constexpr const char* kAuthTokenEnv = "RECINV_AUTH_TOKEN";

/// Performs the vocab handshake; throws Error when it fails.
std::unique_ptr<ModelBackend> remote_backend(const std::string& endpoint,
                                             RemoteOptions options = {});

}  // namespace recinv::backend
