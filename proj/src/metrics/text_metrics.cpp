#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "recinv/metrics.hpp"
#include "recinv/util/text.hpp"

namespace recinv::metrics {
namespace {

using Tokens = std::vector<std::string>;
using NgramCounts = std::map<std::vector<std::string_view>, int>;

NgramCounts ngrams(const Tokens& t, std::size_t n) {
  NgramCounts counts;
  if (t.size() < n) return counts;
  for (std::size_t i = 0; i + n <= t.size(); ++i) {
    ++counts[std::vector<std::string_view>(t.begin() + i, t.begin() + i + n)];
  }
  return counts;
}

double f_measure(double overlap, std::size_t ref_len, std::size_t hyp_len) {
  if (overlap == 0.0) return 0.0;
  const double p = overlap / static_cast<double>(hyp_len);
  const double r = overlap / static_cast<double>(ref_len);
  return 2.0 * p * r / (p + r);
}

}  // namespace

double bleu(std::string_view reference, std::string_view hypothesis) {
  constexpr std::size_t kOrder = 4;
  const Tokens ref = util::whitespace_tokens(reference);
  const Tokens hyp = util::whitespace_tokens(hypothesis);

  double correct[kOrder] = {};
  double total[kOrder] = {};
  for (std::size_t n = 1; n <= kOrder; ++n) {
    const auto h = ngrams(hyp, n);
    const auto r = ngrams(ref, n);
    for (const auto& [gram, count] : h) {
      auto it = r.find(gram);
      if (it != r.end()) correct[n - 1] += std::min(count, it->second);
    }
    total[n - 1] = hyp.size() >= n ? static_cast<double>(hyp.size() - n + 1) : 0.0;
  }
  if (std::all_of(std::begin(correct), std::end(correct), [](double c) { return c == 0.0; })) {
    return 0.0;
  }

  double bp = 1.0;
  if (hyp.size() < ref.size()) {
    bp = hyp.empty() ? 0.0
                     : std::exp(1.0 - static_cast<double>(ref.size()) / static_cast<double>(hyp.size()));
  }

  double precisions[kOrder] = {};
  double smooth = 1.0;
  std::size_t eff_order = kOrder;
  for (std::size_t n = 1; n <= kOrder; ++n) {
    if (total[n - 1] == 0.0) break;
    eff_order = n;
    if (correct[n - 1] == 0.0) {
      smooth *= 2.0;
      precisions[n - 1] = 100.0 / (smooth * total[n - 1]);
    } else {
      precisions[n - 1] = 100.0 * correct[n - 1] / total[n - 1];
    }
  }
  double log_sum = 0.0;
  for (std::size_t n = 0; n < eff_order; ++n) {
    log_sum += precisions[n] == 0.0 ? -9999999999.0 : std::log(precisions[n]);
  }
  return bp * std::exp(log_sum / static_cast<double>(eff_order));
}

double rouge_l(std::string_view reference, std::string_view hypothesis) {
  const Tokens ref = util::whitespace_tokens(reference);
  const Tokens hyp = util::whitespace_tokens(hypothesis);
  if (ref.empty() || hyp.empty()) return 0.0;
  std::vector<std::size_t> prev(hyp.size() + 1, 0), cur(hyp.size() + 1, 0);
  for (std::size_t i = 1; i <= ref.size(); ++i) {
    for (std::size_t j = 1; j <= hyp.size(); ++j) {
      cur[j] = ref[i - 1] == hyp[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return f_measure(static_cast<double>(prev[hyp.size()]), ref.size(), hyp.size());
}

double token_f1(std::string_view reference, std::string_view hypothesis) {
  const Tokens ref = util::whitespace_tokens(reference);
  const Tokens hyp = util::whitespace_tokens(hypothesis);
  if (ref.empty() || hyp.empty()) return 0.0;
  std::map<std::string_view, int> counts;
  for (const auto& t : ref) ++counts[t];
  double common = 0.0;
  for (const auto& t : hyp) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      common += 1.0;
    }
  }
  return f_measure(common, ref.size(), hyp.size());
}

}  // namespace recinv::metrics
