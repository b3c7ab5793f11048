#pragma once

#include <cmath>
#include <span>

namespace recinv::util {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Cosine similarity; 0 with `degenerate` set when either vector is all zero.
inline double cosine(std::span<const double> a, std::span<const double> b, bool* degenerate = nullptr) {
  const double na = std::sqrt(dot(a, a));
  const double nb = std::sqrt(dot(b, b));
  if (degenerate) *degenerate = (na == 0.0 || nb == 0.0);
  if (na == 0.0 || nb == 0.0) return 0.0;
  double c = dot(a, b) / (na * nb);
  if (c > 1.0) c = 1.0;
  if (c < -1.0) c = -1.0;
  return c;
}

}  // namespace recinv::util
