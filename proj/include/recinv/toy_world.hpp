#pragma once

// Deterministic toy setting: victim, surrogate inverter and projection built
// from a prompt corpus, plus a seeded generator of small title-list corpora.

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "recinv/backend.hpp"
#include "recinv/corpus.hpp"
#include "recinv/logits.hpp"

namespace recinv::toy {

using Json = nlohmann::json;

struct ToyWorldConfig {
  std::uint64_t victim_seed = 1;
  int victim_ngram_order = 2;
  /// The inverter scores with a perturbed copy of the victim's n-gram model,
  /// so its own ranking is imperfect and victim-side rescoring can correct it.
  int inverter_ngram_order = 2;
  double inverter_noise = 0.5;
  std::uint64_t inverter_noise_seed = 3;
  std::size_t seq_len = 16;
  std::size_t hidden_dim = 8;
  std::uint64_t projection_seed = 7;
  int max_length = 0;  // 0: longest corpus prompt plus two tokens
  int patience = 0;

  void validate() const;
  Json to_json() const;
};

struct ToyWorld {
  std::vector<std::string> vocab;
  std::shared_ptr<const logits::ProjectionWeights> projection;
  std::unique_ptr<backend::ToyVictim> victim;
  std::unique_ptr<backend::ToyInverter> inverter;
};

/// Vocabulary is the token set of `prompts`. Without `projection`, weights are
/// seeded from config.projection_seed.
ToyWorld make_toy_world(std::span<const std::string> prompts, const ToyWorldConfig& config,
                        std::shared_ptr<const logits::ProjectionWeights> projection = nullptr);

/// Fifty movie-style titles.
std::span<const std::string_view> catalog();

struct ToyCorpusConfig {
  std::size_t prompts = 200;
  std::size_t catalog_size = 50;
  int n_min = 3;  // titles per prompt, inclusive
  int n_max = 5;
  std::uint64_t seed = 42;
  std::string template_body = "The user liked {liked_items}.";

  void validate() const;
};

/// Prompt i draws its title count and titles from substream "toy/<i>".
std::vector<corpus::InstructionSample> toy_corpus(const ToyCorpusConfig& config);

}  // namespace recinv::toy
