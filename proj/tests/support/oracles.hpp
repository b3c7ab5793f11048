#pragma once

// Straightforward re-implementations of the text metrics, written from their
// definitions and sharing no code with the library.

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace recinv::testing::oracle {

inline std::vector<std::string> split(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

inline std::vector<std::string> grams(const std::vector<std::string>& t, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i + n <= t.size(); ++i) {
    std::string g;
    for (std::size_t k = 0; k < n; ++k) g += t[i + k] + '\x01';
    out.push_back(g);
  }
  return out;
}

// Clipped matches: each hypothesis n-gram consumes one unused reference occurrence.
inline int clipped_matches(std::vector<std::string> hyp, std::vector<std::string> ref) {
  int m = 0;
  std::vector<bool> used(ref.size(), false);
  for (const auto& g : hyp) {
    for (std::size_t i = 0; i < ref.size(); ++i) {
      if (!used[i] && ref[i] == g) {
        used[i] = true;
        ++m;
        break;
      }
    }
  }
  return m;
}

inline double bleu(const std::string& ref_s, const std::string& hyp_s) {
  const auto ref = split(ref_s), hyp = split(hyp_s);
  int match[4], total[4];
  bool any = false;
  for (int n = 1; n <= 4; ++n) {
    match[n - 1] = clipped_matches(grams(hyp, n), grams(ref, n));
    total[n - 1] = static_cast<int>(grams(hyp, n).size());
    any = any || match[n - 1] > 0;
  }
  if (!any) return 0.0;
  const double c = static_cast<double>(hyp.size()), r = static_cast<double>(ref.size());
  const double bp = c >= r ? 1.0 : (c == 0 ? 0.0 : std::exp(1.0 - r / c));
  double log_sum = 0.0, k = 1.0;
  int order = 0;
  for (int n = 0; n < 4 && total[n] > 0; ++n) {
    double p;
    if (match[n] == 0) {
      k *= 2.0;
      p = 100.0 / (k * total[n]);
    } else {
      p = 100.0 * match[n] / total[n];
    }
    log_sum += std::log(p);
    order = n + 1;
  }
  return bp * std::exp(log_sum / order);
}

inline int lcs_rec(const std::vector<std::string>& a, const std::vector<std::string>& b, std::size_t i,
                   std::size_t j, std::vector<std::vector<int>>& memo) {
  if (i == a.size() || j == b.size()) return 0;
  int& m = memo[i][j];
  if (m >= 0) return m;
  if (a[i] == b[j]) return m = 1 + lcs_rec(a, b, i + 1, j + 1, memo);
  return m = std::max(lcs_rec(a, b, i + 1, j, memo), lcs_rec(a, b, i, j + 1, memo));
}

inline double f_score(double overlap, double ref_len, double hyp_len) {
  if (overlap == 0) return 0.0;
  const double p = overlap / hyp_len, r = overlap / ref_len;
  return 2 * p * r / (p + r);
}

inline double rouge_l(const std::string& ref_s, const std::string& hyp_s) {
  const auto ref = split(ref_s), hyp = split(hyp_s);
  if (ref.empty() || hyp.empty()) return 0.0;
  std::vector<std::vector<int>> memo(ref.size(), std::vector<int>(hyp.size(), -1));
  return f_score(lcs_rec(ref, hyp, 0, 0, memo), ref.size(), hyp.size());
}

inline double token_f1(const std::string& ref_s, const std::string& hyp_s) {
  auto ref = split(ref_s), hyp = split(hyp_s);
  if (ref.empty() || hyp.empty()) return 0.0;
  std::sort(ref.begin(), ref.end());
  std::sort(hyp.begin(), hyp.end());
  std::vector<std::string> common;
  std::set_intersection(ref.begin(), ref.end(), hyp.begin(), hyp.end(), std::back_inserter(common));
  return f_score(static_cast<double>(common.size()), ref.size(), hyp.size());
}

inline double item_match(const std::vector<std::string>& t, const std::vector<std::string>& t_hat) {
  const std::set<std::string> a(t.begin(), t.end()), b(t_hat.begin(), t_hat.end());
  std::vector<std::string> both;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
  return static_cast<double>(both.size()) / static_cast<double>(a.size());
}

}  // namespace recinv::testing::oracle
