#include <cmath>

#include "recinv/backend.hpp"
#include "recinv/error.hpp"
#include "recinv/util/rng.hpp"

namespace recinv::backend {

ToyVictimConfig ToyVictimConfig::for_vocab(std::vector<std::string> vocab, std::uint64_t hash_seed,
                                           int ngram_order) {
  ToyVictimConfig c;
  c.feature_dim = vocab.size();
  c.vocab = std::move(vocab);
  c.hash_seed = hash_seed;
  c.ngram_order = ngram_order;
  c.validate();
  return c;
}

void ToyVictimConfig::validate() const {
  if (vocab.empty()) throw Error("toy victim: empty vocabulary");
  if (feature_dim != vocab.size()) throw Error("toy victim: feature_dim must equal vocab size");
  if (ngram_order < 1) throw Error("toy victim: ngram_order must be >= 1");
  if (!std::isfinite(noise) || noise < 0.0) throw Error("toy victim: noise must be finite and >= 0");
}

std::vector<double> ngram_embedding(const ToyVictimConfig& config,
                                    std::span<const std::string> ngram) {
  std::string key;
  for (std::size_t i = 0; i < ngram.size(); ++i) {
    if (i) key.push_back('\x1f');
    key += ngram[i];
  }
  const std::uint64_t h = util::stable_hash(key);
  auto component = [](std::uint64_t seed, std::size_t j) {
    const std::uint64_t u = util::splitmix64(seed + j);
    return 2.0 * (static_cast<double>(u >> 11) * 0x1.0p-53) - 1.0;
  };
  const std::uint64_t seed = util::splitmix64(h ^ util::splitmix64(config.hash_seed));
  std::vector<double> emb(config.feature_dim);
  for (std::size_t j = 0; j < emb.size(); ++j) emb[j] = component(seed, j);
  if (config.noise > 0.0) {
    const std::uint64_t nseed = util::splitmix64(h ^ util::splitmix64(~config.noise_seed));
    for (std::size_t j = 0; j < emb.size(); ++j) emb[j] += config.noise * component(nseed, j);
  }
  return emb;
}

logits::LogitMatrix toy_victim_logits(const ToyVictimConfig& config, std::string_view prompt) {
  config.validate();
  logits::LogitMatrix m;
  m.rows = 1;
  m.cols = config.feature_dim;
  m.vocab = config.vocab;
  m.values.assign(m.cols, 0.0);
  const auto tokens = toy_tokenize(prompt);
  const std::span<const std::string> all(tokens);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    for (int order = 1; order <= config.ngram_order; ++order) {
      if (i + 1 < static_cast<std::size_t>(order)) break;
      auto emb = ngram_embedding(config, all.subspan(i + 1 - order, order));
      for (std::size_t j = 0; j < m.cols; ++j) m.values[j] += emb[j];
    }
  }
  return m;
}

ToyVictim::ToyVictim(ToyVictimConfig config, std::string name)
    : config_(std::move(config)), name_(std::move(name)) {
  config_.validate();
}

logits::LogitMatrix ToyVictim::do_query_logits(std::string_view prompt) const {
  return toy_victim_logits(config_, prompt);
}

}  // namespace recinv::backend
