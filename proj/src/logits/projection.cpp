#include <cmath>

#include "recinv/error.hpp"
#include "recinv/logits.hpp"
#include "recinv/util/digest.hpp"
#include "recinv/util/io.hpp"
#include "recinv/util/rng.hpp"

namespace recinv::logits {

void ProjectionWeights::validate() const {
  if (input_dim == 0 || seq_len == 0 || hidden_dim == 0) {
    throw Error("projection: dimensions must be positive");
  }
  if (matrix.size() != input_dim * output_dim()) {
    throw Error("projection: matrix has " + std::to_string(matrix.size()) + " entries, expected " +
                std::to_string(input_dim) + "x" + std::to_string(output_dim()));
  }
  if (bias.size() != output_dim()) throw Error("projection: bias length != T*d");
  for (double v : matrix) {
    if (!std::isfinite(v)) throw Error("projection: non-finite weight");
  }
  for (double v : bias) {
    if (!std::isfinite(v)) throw Error("projection: non-finite bias");
  }
}

std::string ProjectionWeights::digest() const {
  std::vector<double> header{static_cast<double>(input_dim), static_cast<double>(seq_len),
                             static_cast<double>(hidden_dim)};
  std::string parts = util::doubles_digest(header) + util::doubles_digest(matrix) +
                      util::doubles_digest(bias);
  return util::sha256_hex(parts);
}

void ProjectionWeights::finalize() {
  validate();
  fingerprint = digest();
}

ProjectionWeights ProjectionWeights::seeded(std::size_t input_dim, std::size_t seq_len,
                                            std::size_t hidden_dim, std::uint64_t seed) {
  ProjectionWeights w;
  w.input_dim = input_dim;
  w.seq_len = seq_len;
  w.hidden_dim = hidden_dim;
  w.provenance = Provenance::SeededRandom;
  w.matrix.resize(input_dim * w.output_dim());
  w.bias.assign(w.output_dim(), 0.0);
  util::Rng rng(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(input_dim));
  for (double& v : w.matrix) v = (2.0 * rng.unit() - 1.0) * scale;
  w.finalize();
  return w;
}

Json ProjectionWeights::to_json() const {
  return Json{{"format", "recinv.projection.v1"},
              {"input_dim", input_dim},
              {"seq_len", seq_len},
              {"hidden_dim", hidden_dim},
              {"provenance", provenance == Provenance::Loaded ? "loaded" : "seeded-random"},
              {"weights", matrix},
              {"bias", bias},
              {"digest", digest()}};
}

ProjectionWeights ProjectionWeights::from_json(const Json& j) {
  ProjectionWeights w;
  w.input_dim = j.at("input_dim").get<std::size_t>();
  w.seq_len = j.at("seq_len").get<std::size_t>();
  w.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  w.matrix = j.at("weights").get<std::vector<double>>();
  w.bias = j.contains("bias") ? j.at("bias").get<std::vector<double>>()
                              : std::vector<double>(w.output_dim(), 0.0);
  w.provenance = Provenance::Loaded;
  w.finalize();
  if (j.contains("digest") && j.at("digest").get<std::string>() != w.fingerprint) {
    throw Error("projection: digest mismatch (file corrupted or edited)");
  }
  return w;
}

ProjectionWeights ProjectionWeights::load(const std::filesystem::path& path) {
  return from_json(util::read_json(path));
}

void ProjectionWeights::save(const std::filesystem::path& path) const {
  util::atomic_write(path, to_json().dump() + "\n");
}

Json ProjectedEmbedding::to_json() const {
  Json rows = Json::array();
  for (std::size_t t = 0; t < seq_len; ++t) {
    rows.push_back(std::vector<double>(values.begin() + static_cast<std::ptrdiff_t>(t * hidden_dim),
                                       values.begin() + static_cast<std::ptrdiff_t>((t + 1) * hidden_dim)));
  }
  return rows;
}

ProjectedEmbedding ProjectedEmbedding::from_json(const Json& rows) {
  ProjectedEmbedding e;
  if (!rows.is_array() || rows.empty()) throw Error("embedding: expected a non-empty 2-D array");
  e.seq_len = rows.size();
  e.hidden_dim = rows.at(0).size();
  for (const auto& row : rows) {
    if (row.size() != e.hidden_dim) throw Error("embedding: ragged rows");
    for (const auto& v : row) e.values.push_back(v.get<double>());
  }
  return e;
}

void project_into(std::span<const double> h, const ProjectionWeights& w, std::span<double> out) {
  const std::size_t od = w.output_dim();
  std::copy(w.bias.begin(), w.bias.end(), out.begin());
  const double* m = w.matrix.data();
  for (std::size_t i = 0; i < w.input_dim; ++i) {
    const double hi = h[i];
    const double* wrow = m + i * od;
    for (std::size_t j = 0; j < od; ++j) out[j] += hi * wrow[j];
  }
}

ProjectedEmbedding project(const AlignedLogits& h, const ProjectionWeights& w) {
  if (h.values.size() != w.input_dim) {
    throw Error("project: aligned width " + std::to_string(h.values.size()) +
                " does not match projection input (" + std::to_string(w.input_dim) + " -> " +
                std::to_string(w.seq_len) + "x" + std::to_string(w.hidden_dim) + ")");
  }
  if (w.matrix.size() != w.input_dim * w.output_dim() || w.bias.size() != w.output_dim()) {
    throw Error("project: malformed projection weights");
  }
  ProjectedEmbedding e;
  e.seq_len = w.seq_len;
  e.hidden_dim = w.hidden_dim;
  e.values.resize(w.output_dim());
  project_into(h.values, w, e.values);
  e.projection_digest = w.fingerprint.empty() ? w.digest() : w.fingerprint;
  return e;
}

}  // namespace recinv::logits
