#include <algorithm>
#include <mutex>
#include <optional>
#include <unordered_map>
#include <unordered_set>

#include "recinv/backend.hpp"
#include "recinv/error.hpp"
#include "recinv/util/vec.hpp"

namespace recinv::backend {

// With the inverter's own vocabulary alignment is the identity, so projecting
// a sum of n-gram embeddings equals summing their projections.
class ProjectedNgramCache {
 public:
  ProjectedNgramCache(const ToyVictimConfig& config, const logits::ProjectionWeights& w)
      : config_(config), w_(w) {}

  const std::vector<double>& get(std::span<const int> ids) {
    std::string key(reinterpret_cast<const char*>(ids.data()), ids.size() * sizeof(int));
    std::lock_guard lock(mu_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    std::vector<std::string> ngram;
    ngram.reserve(ids.size());
    for (int id : ids) ngram.push_back(config_.vocab[static_cast<std::size_t>(id)]);
    const auto emb = ngram_embedding(config_, ngram);
    const std::size_t out_dim = w_.output_dim();
    std::vector<double> proj(out_dim, 0.0);
    for (std::size_t j = 0; j < emb.size(); ++j) {
      const double* row = w_.matrix.data() + j * out_dim;
      for (std::size_t k = 0; k < out_dim; ++k) proj[k] += emb[j] * row[k];
    }
    // Nodes are stable, so the reference stays valid after the lock is released.
    return cache_.emplace(std::move(key), std::move(proj)).first->second;
  }

 private:
  const ToyVictimConfig& config_;
  const logits::ProjectionWeights& w_;
  std::mutex mu_;
  std::unordered_map<std::string, std::vector<double>> cache_;
};

namespace {

struct Hypothesis {
  std::vector<int> ids;
  std::vector<double> proj;  // linear part of the projection, bias excluded
  double score = 0.0;
};

struct Expansion {
  std::size_t parent = 0;
  int token = 0;
  double score = 0.0;
};

// Appends `tok` to `parent`, adding the n-grams that end at the new position.
void extend(const Hypothesis& parent, int tok, int ngram_order, ProjectedNgramCache& cache,
            std::vector<int>& ids_buf, std::vector<double>& out) {
  out = parent.proj;
  ids_buf.assign(parent.ids.begin(), parent.ids.end());
  ids_buf.push_back(tok);
  const std::size_t len = ids_buf.size();
  for (int order = 1; order <= ngram_order; ++order) {
    if (len < static_cast<std::size_t>(order)) break;
    const auto& p = cache.get(std::span<const int>(ids_buf).subspan(len - order, order));
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += p[k];
  }
}

}  // namespace

CandidateSet toy_invert(const ToyVictimConfig& config, const logits::ProjectionWeights& projection,
                        const logits::ProjectedEmbedding& target, int beam_width,
                        const ToyInverterOptions& options, ProjectedNgramCache* shared) {
  config.validate();
  if (beam_width < 1) throw Error("toy_invert: beam width must be >= 1");
  if (options.max_length < 1) throw Error("toy_invert: max_length must be >= 1");
  const std::size_t V = config.vocab.size();
  if (projection.input_dim != V) {
    throw Error("toy_invert: projection expects width " + std::to_string(projection.input_dim) +
                ", vocabulary has " + std::to_string(V));
  }
  if (target.values.size() != projection.output_dim()) {
    throw Error("toy_invert: target embedding has " + std::to_string(target.values.size()) +
                " values, projection emits " + std::to_string(projection.output_dim()));
  }

  const std::size_t D = projection.output_dim();
  std::optional<ProjectedNgramCache> own;
  if (!shared) own.emplace(config, projection);
  ProjectedNgramCache& cache = shared ? *shared : *own;
  std::vector<double> buf(D), full(D);
  std::vector<int> ids_buf;
  auto score_of = [&](const std::vector<double>& lin) {
    for (std::size_t k = 0; k < D; ++k) full[k] = lin[k] + projection.bias[k];
    return util::cosine(full, target.values);
  };

  const auto K = static_cast<std::size_t>(beam_width);
  std::vector<Hypothesis> beam(1);
  beam[0].proj.assign(D, 0.0);
  std::vector<std::pair<std::vector<int>, double>> finished;
  double best = -2.0;
  int stale = 0;

  for (int step = 0; step < options.max_length; ++step) {
    std::vector<Expansion> exps;
    exps.reserve(beam.size() * V);
    for (std::size_t p = 0; p < beam.size(); ++p) {
      for (std::size_t tok = 0; tok < V; ++tok) {
        extend(beam[p], static_cast<int>(tok), config.ngram_order, cache, ids_buf, buf);
        exps.push_back({p, static_cast<int>(tok), score_of(buf)});
      }
    }
    const std::size_t keep = std::min(K, exps.size());
    // Generation order breaks ties, so the search is deterministic.
    std::partial_sort(exps.begin(), exps.begin() + static_cast<std::ptrdiff_t>(keep), exps.end(),
                      [](const Expansion& a, const Expansion& b) {
                        if (a.score != b.score) return a.score > b.score;
                        if (a.parent != b.parent) return a.parent < b.parent;
                        return a.token < b.token;
                      });
    std::vector<Hypothesis> next;
    next.reserve(keep);
    bool improved = false;
    for (std::size_t i = 0; i < keep; ++i) {
      const auto& ex = exps[i];
      Hypothesis h;
      extend(beam[ex.parent], ex.token, config.ngram_order, cache, ids_buf, h.proj);
      h.ids = ids_buf;
      h.score = ex.score;
      finished.emplace_back(h.ids, h.score);
      if (h.score > best) {
        best = h.score;
        improved = true;
      }
      next.push_back(std::move(h));
    }
    beam = std::move(next);
    stale = improved ? 0 : stale + 1;
    if (options.patience > 0 && stale >= options.patience) break;
  }

  std::stable_sort(finished.begin(), finished.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  CandidateSet out;
  std::unordered_set<std::string> seen;
  std::vector<std::string> words;
  for (const auto& [ids, score] : finished) {
    if (out.candidates.size() == K) break;
    words.clear();
    for (int id : ids) words.push_back(config.vocab[static_cast<std::size_t>(id)]);
    std::string text = toy_detokenize(words);
    if (!seen.insert(candidate_key(text)).second) continue;
    out.candidates.push_back(Candidate{std::move(text), score});
  }
  return out;
}

ToyInverter::ToyInverter(ToyVictimConfig config,
                         std::shared_ptr<const logits::ProjectionWeights> projection,
                         ToyInverterOptions options, std::string name)
    : config_(std::move(config)),
      projection_(std::move(projection)),
      options_(options),
      name_(std::move(name)) {
  config_.validate();
  if (!projection_) throw Error("toy inverter: projection weights required");
  cache_ = std::make_shared<ProjectedNgramCache>(config_, *projection_);
}

CandidateSet ToyInverter::do_invert_embedding(const logits::ProjectedEmbedding& e,
                                              int beam_width) const {
  return toy_invert(config_, *projection_, e, beam_width, options_, cache_.get());
}

}  // namespace recinv::backend
