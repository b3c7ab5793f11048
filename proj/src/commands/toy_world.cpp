#include <algorithm>

#include "recinv/error.hpp"
#include "recinv/toy_world.hpp"
#include "recinv/util/rng.hpp"

namespace recinv::toy {
namespace {

constexpr std::string_view kCatalog[] = {
    "Alien",          "Amelie",           "Apollo 13",        "Babe",
    "Batman",         "Big Fish",         "Braveheart",       "Casablanca",
    "Chinatown",      "Clueless",         "Contact",          "Dune",
    "Fargo",          "Gattaca",          "Ghost",            "Gladiator",
    "Goodfellas",     "Heat",             "Hook",             "Jaws",
    "Jumanji",        "Memento",          "Metropolis",       "Mulan",
    "Notorious",      "Psycho",           "Rocky",            "Rushmore",
    "Scream",         "Se7en",            "Seven Samurai",    "Shrek",
    "Speed",          "Spirited Away",    "Star Wars",        "Taxi Driver",
    "The Birds",      "The Matrix",       "The Piano",        "The Sting",
    "Titanic",        "Toy Story",        "Trainspotting",    "Twelve Monkeys",
    "Up",             "Vertigo",          "Wall-E",           "Witness",
    "Zodiac",         "Zootopia",
};

}  // namespace

void ToyWorldConfig::validate() const {
  if (victim_ngram_order < 1 || inverter_ngram_order < 1) throw Error("toy world: ngram order must be >= 1");
  if (seq_len == 0 || hidden_dim == 0) throw Error("toy world: projection shape must be positive");
  if (!(inverter_noise >= 0.0)) throw Error("toy world: inverter_noise must be >= 0");
  if (max_length < 0 || patience < 0) throw Error("toy world: max_length and patience must be >= 0");
}

Json ToyWorldConfig::to_json() const {
  return Json{{"victim_seed", victim_seed},
              {"victim_ngram_order", victim_ngram_order},
              {"inverter_ngram_order", inverter_ngram_order},
              {"inverter_noise", inverter_noise},
              {"inverter_noise_seed", inverter_noise_seed},
              {"seq_len", seq_len},
              {"hidden_dim", hidden_dim},
              {"projection_seed", projection_seed},
              {"max_length", max_length},
              {"patience", patience}};
}

ToyWorld make_toy_world(std::span<const std::string> prompts, const ToyWorldConfig& config,
                        std::shared_ptr<const logits::ProjectionWeights> projection) {
  config.validate();
  if (prompts.empty()) throw Error("toy world: empty prompt corpus");
  ToyWorld w;
  w.vocab = backend::build_toy_vocab(prompts);
  if (w.vocab.empty()) throw Error("toy world: corpus has no tokens");

  int max_length = config.max_length;
  if (max_length == 0) {
    std::size_t longest = 0;
    for (const auto& p : prompts) longest = std::max(longest, backend::toy_tokenize(p).size());
    max_length = static_cast<int>(longest) + 2;
  }

  if (projection) {
    if (projection->input_dim != w.vocab.size()) {
      throw Error("toy world: projection expects width " + std::to_string(projection->input_dim) +
                  ", corpus vocabulary has " + std::to_string(w.vocab.size()));
    }
    w.projection = std::move(projection);
  } else {
    w.projection = std::make_shared<const logits::ProjectionWeights>(logits::ProjectionWeights::seeded(
        w.vocab.size(), config.seq_len, config.hidden_dim, config.projection_seed));
  }
  w.victim = std::make_unique<backend::ToyVictim>(
      backend::ToyVictimConfig::for_vocab(w.vocab, config.victim_seed, config.victim_ngram_order));
  auto inverter_model =
      backend::ToyVictimConfig::for_vocab(w.vocab, config.victim_seed, config.inverter_ngram_order);
  inverter_model.noise = config.inverter_noise;
  inverter_model.noise_seed = config.inverter_noise_seed;
  w.inverter = std::make_unique<backend::ToyInverter>(std::move(inverter_model), w.projection, backend::ToyInverterOptions{max_length, config.patience});
  return w;
}

std::span<const std::string_view> catalog() { return kCatalog; }

void ToyCorpusConfig::validate() const {
  if (catalog_size == 0 || catalog_size > std::size(kCatalog)) {
    throw Error("toy corpus: catalog_size must be in [1, " + std::to_string(std::size(kCatalog)) + "]");
  }
  if (n_min < 1 || n_max < n_min) throw Error("toy corpus: need 1 <= n_min <= n_max");
  if (static_cast<std::size_t>(n_max) > catalog_size) throw Error("toy corpus: n_max exceeds catalog");
}

std::vector<corpus::InstructionSample> toy_corpus(const ToyCorpusConfig& config) {
  config.validate();
  corpus::PromptTemplate tmpl{"toy", corpus::TaskType::Direct, config.template_body};
  corpus::validate_template(tmpl);

  std::vector<std::string> titles(kCatalog, kCatalog + config.catalog_size);
  std::vector<corpus::InstructionSample> out;
  out.reserve(config.prompts);
  for (std::size_t i = 0; i < config.prompts; ++i) {
    const std::string id = "toy/" + std::to_string(i);
    util::Rng rng(util::substream_seed(config.seed, id));
    const int n = static_cast<int>(rng.uniform_int(config.n_min, config.n_max));
    std::vector<std::string> pool = titles;
    // Partial Fisher-Yates: the first n entries are a uniform draw without replacement.
    for (std::size_t k = 0; k < static_cast<std::size_t>(n); ++k) {
      const std::size_t j = k + static_cast<std::size_t>(rng.below(pool.size() - k));
      std::swap(pool[k], pool[j]);
    }

    corpus::UserHistory h;
    h.user_id = id;
    for (int k = 0; k < n; ++k) {
      corpus::RatingRecord r;
      r.user_id = id;
      r.item_id = pool[static_cast<std::size_t>(k)];
      r.item_title = pool[static_cast<std::size_t>(k)];
      r.rating = 5.0;
      h.records.push_back(std::move(r));
    }
    corpus::RenderRequest req{tmpl, h, h.records, {}, n, std::nullopt};
    auto outcome = corpus::render_prompt(req);
    if (!outcome.sample) throw Error("toy corpus: template did not render for " + id);
    outcome.sample->sample_id = id;
    outcome.sample->user_id = id;
    out.push_back(std::move(*outcome.sample));
  }
  return out;
}

}  // namespace recinv::toy
