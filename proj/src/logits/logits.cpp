#include <algorithm>
#include <cmath>
#include <numeric>

#include "recinv/error.hpp"
#include "recinv/logits.hpp"
#include "recinv/util/digest.hpp"

namespace recinv::logits {

void FilterMeta::validate() const {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw Error("filter: temperature must be positive and finite");
  }
  if (top_k && *top_k < 1) throw Error("filter: top_k must be >= 1");
  if (top_p && (!(*top_p > 0.0) || *top_p > 1.0)) throw Error("filter: top_p must be in (0, 1]");
}

void LogitMatrix::validate() const {
  if (values.size() != rows * cols) throw Error("logits: values do not match rows x cols");
  if (vocab.size() != cols) {
    throw Error("logits: vocab size " + std::to_string(vocab.size()) + " != width " +
                std::to_string(cols));
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw Error("logits: non-finite value");
  }
  filter.validate();
}

LogitMatrix LogitMatrix::from_json(const Json& j) {
  LogitMatrix m;
  m.vocab = j.at("vocab").get<std::vector<std::string>>();
  const auto& rows = j.at("values");
  m.rows = rows.size();
  m.cols = m.vocab.size();
  m.values.reserve(m.rows * m.cols);
  for (const auto& row : rows) {
    if (row.size() != m.cols) throw Error("logits: ragged row in fixture");
    for (const auto& v : row) m.values.push_back(v.get<double>());
  }
  if (j.contains("filter")) {
    const auto& f = j.at("filter");
    m.filter.temperature = f.value("temperature", 1.0);
    if (f.contains("top_k") && !f.at("top_k").is_null()) m.filter.top_k = f.at("top_k").get<int>();
    if (f.contains("top_p") && !f.at("top_p").is_null()) m.filter.top_p = f.at("top_p").get<double>();
  }
  m.validate();
  return m;
}

Json LogitMatrix::to_json() const {
  Json rows_json = Json::array();
  for (std::size_t r = 0; r < rows; ++r) {
    auto rv = row(r);
    rows_json.push_back(std::vector<double>(rv.begin(), rv.end()));
  }
  Json f{{"temperature", filter.temperature},
         {"top_k", filter.top_k ? Json(*filter.top_k) : Json(nullptr)},
         {"top_p", filter.top_p ? Json(*filter.top_p) : Json(nullptr)}};
  return Json{{"vocab", vocab}, {"values", rows_json}, {"filter", f}};
}

LogitMatrix apply_filters(const LogitMatrix& raw) {
  raw.filter.validate();
  LogitMatrix out = raw;
  if (raw.filter.is_identity()) return out;

  const FilterMeta& f = raw.filter;
  std::vector<std::size_t> order(out.cols);
  for (std::size_t r = 0; r < out.rows; ++r) {
    auto row = out.row(r);
    if (f.temperature != 1.0) {
      for (double& v : row) v /= f.temperature;
    }
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return row[a] > row[b]; });

    std::size_t keep = out.cols;
    if (f.top_k) keep = std::min<std::size_t>(keep, static_cast<std::size_t>(*f.top_k));
    if (f.top_p) {
      // Nucleus over the top-k survivors: smallest prefix with mass >= p.
      const double max_v = row[order[0]];
      double z = 0.0;
      for (std::size_t i = 0; i < keep; ++i) z += std::exp(row[order[i]] - max_v);
      double cum = 0.0;
      std::size_t nucleus = keep;
      for (std::size_t i = 0; i < keep; ++i) {
        cum += std::exp(row[order[i]] - max_v) / z;
        if (cum >= *f.top_p) {
          nucleus = i + 1;
          break;
        }
      }
      keep = nucleus;
    }
    for (std::size_t i = keep; i < out.cols; ++i) row[order[i]] = kFloor;
  }
  return out;
}

VocabAligner::VocabAligner(std::span<const std::string> source_vocab,
                           std::span<const std::string> target_vocab)
    : source_index_(target_vocab.size(), -1), target_digest_(util::vocab_digest(target_vocab)) {
  std::unordered_map<std::string_view, std::int64_t> index;
  index.reserve(source_vocab.size());
  for (std::size_t i = 0; i < source_vocab.size(); ++i) {
    index.emplace(source_vocab[i], static_cast<std::int64_t>(i));
  }
  for (std::size_t t = 0; t < target_vocab.size(); ++t) {
    auto it = index.find(target_vocab[t]);
    if (it != index.end()) source_index_[t] = it->second;
  }
}

void VocabAligner::align_row(std::span<const double> source_row, std::span<double> out) const {
  for (std::size_t t = 0; t < source_index_.size(); ++t) {
    const auto s = source_index_[t];
    out[t] = s >= 0 ? source_row[static_cast<std::size_t>(s)] : kFloor;
  }
}

std::vector<double> reduce_rows(const LogitMatrix& src, RowReduction reduction) {
  if (src.rows == 0) return std::vector<double>(src.cols, 0.0);
  if (reduction == RowReduction::Last || src.rows == 1) {
    auto last = src.row(src.rows - 1);
    return {last.begin(), last.end()};
  }
  std::vector<double> mean(src.cols, 0.0);
  for (std::size_t r = 0; r < src.rows; ++r) {
    auto row = src.row(r);
    for (std::size_t c = 0; c < src.cols; ++c) mean[c] += row[c];
  }
  for (double& v : mean) v /= static_cast<double>(src.rows);
  return mean;
}

AlignedLogits align_vocab(const LogitMatrix& src, std::span<const std::string> target_vocab,
                          RowReduction reduction) {
  if (target_vocab.empty()) throw Error("align_vocab: empty target vocabulary");
  VocabAligner aligner(src.vocab, target_vocab);
  std::vector<double> reduced = reduce_rows(src, reduction);
  AlignedLogits h;
  h.values.resize(target_vocab.size());
  aligner.align_row(reduced, h.values);
  h.target_vocab_digest = aligner.target_digest();
  return h;
}

}  // namespace recinv::logits
