#include <algorithm>
#include <cmath>

#include "recinv/backend.hpp"
#include "recinv/error.hpp"

namespace recinv::backend {

double sequence_nll(const ModelBackend& backend, std::string_view prompt,
                    const TokenizedText& target) {
  if (target.tokens.empty()) throw Error("sequence_nll: empty target");
  const logits::LogitMatrix z = backend.query_logits(prompt);
  if (z.rows == 0) throw Error("sequence_nll: backend returned no logit rows");
  const bool per_step = z.rows >= target.tokens.size();

  double total = 0.0;
  for (std::size_t t = 0; t < target.tokens.size(); ++t) {
    auto row = z.row(per_step ? t : z.rows - 1);
    const int y = target.tokens[t];
    if (y < 0 || static_cast<std::size_t>(y) >= z.cols) {
      throw Error("sequence_nll: target token id out of range");
    }
    const double max_v = *std::max_element(row.begin(), row.end());
    double z_sum = 0.0;
    for (double v : row) z_sum += std::exp(v - max_v);
    const double log_p = (row[static_cast<std::size_t>(y)] - max_v) - std::log(z_sum);
    total += -log_p;
  }
  return std::max(0.0, total / static_cast<double>(target.tokens.size()));
}

}  // namespace recinv::backend
