#pragma once

// z -> h -> e: filtering of victim logits, alignment to the inverter
// vocabulary, and affine projection to a fixed (T, d) embedding.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace recinv::logits {

using Json = nlohmann::json;

/// Fill value for filtered-out or unmapped entries. Finite so that softmax and
/// cosine arithmetic downstream never meet infinities.
inline constexpr double kFloor = -1e4;

struct FilterMeta {
  double temperature = 1.0;
  std::optional<int> top_k;
  std::optional<double> top_p;

  bool is_identity() const { return temperature == 1.0 && !top_k && !top_p; }
  void validate() const;
};

/// N x V row-major logits with the producing model's vocabulary.
struct LogitMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;
  std::vector<std::string> vocab;
  FilterMeta filter;

  std::span<const double> row(std::size_t r) const {
    return {values.data() + r * cols, cols};
  }
  std::span<double> row(std::size_t r) { return {values.data() + r * cols, cols}; }

  /// Throws on shape mismatch, non-finite values or an invalid filter.
  void validate() const;

  /// Fixture format: {"vocab": [...], "values": [[...], ...]}, optional "filter".
  static LogitMatrix from_json(const Json& j);
  Json to_json() const;
};

/// Temperature scaling, then top-k, then nucleus (top-p) filtering per row.
/// Entries outside the kept set become kFloor. Ties keep the lower index.
LogitMatrix apply_filters(const LogitMatrix& raw);

enum class RowReduction { Last, Mean };

struct AlignedLogits {
  std::vector<double> values;  // width V' (B = 1)
  std::string target_vocab_digest;
};

/// Reusable token-string mapping from a source vocabulary to a target one.
class VocabAligner {
 public:
  VocabAligner(std::span<const std::string> source_vocab, std::span<const std::string> target_vocab);

  std::size_t target_size() const { return source_index_.size(); }
  const std::string& target_digest() const { return target_digest_; }

  /// Source row -> target width; absent tokens get kFloor.
  void align_row(std::span<const double> source_row, std::span<double> out) const;

 private:
  std::vector<std::int64_t> source_index_;  // -1 when absent from the source
  std::string target_digest_;
};

AlignedLogits align_vocab(const LogitMatrix& src, std::span<const std::string> target_vocab,
                          RowReduction reduction = RowReduction::Last);

/// Reduce an N-row matrix to one row in source vocabulary order.
std::vector<double> reduce_rows(const LogitMatrix& src, RowReduction reduction);

enum class Provenance { Loaded, SeededRandom };

/// Affine map V' -> T*d. `matrix` is V' x (T*d), row-major.
struct ProjectionWeights {
  std::size_t input_dim = 0;
  std::size_t seq_len = 64;
  std::size_t hidden_dim = 32;
  std::vector<double> matrix;
  std::vector<double> bias;
  Provenance provenance = Provenance::SeededRandom;

  std::size_t output_dim() const { return seq_len * hidden_dim; }
  void validate() const;
  /// SHA-256 over the shape header and the weights (little-endian doubles).
  std::string digest() const;
  /// Digest cached by finalize(); copied into every ProjectedEmbedding.
  std::string fingerprint;
  /// Validate and refresh `fingerprint` after editing the weights.
  void finalize();

  /// Entries uniform in [-1, 1) / sqrt(input_dim); zero bias.
  static ProjectionWeights seeded(std::size_t input_dim, std::size_t seq_len,
                                  std::size_t hidden_dim, std::uint64_t seed);

  Json to_json() const;
  /// Verifies the stored digest when present.
  static ProjectionWeights from_json(const Json& j);
  static ProjectionWeights load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

struct ProjectedEmbedding {
  std::size_t seq_len = 0;
  std::size_t hidden_dim = 0;
  std::vector<double> values;  // T x d, row-major
  std::string projection_digest;

  Json to_json() const;  // [[...d...] x T]
  static ProjectedEmbedding from_json(const Json& rows);
};

/// e = reshape(h W + bias, (T, d)).
ProjectedEmbedding project(const AlignedLogits& h, const ProjectionWeights& w);

/// Same arithmetic as project() without digest bookkeeping; `out` has T*d entries.
void project_into(std::span<const double> h, const ProjectionWeights& w, std::span<double> out);

}  // namespace recinv::logits
