#pragma once

#include <cassert>
#include <cstdint>
#include <span>

namespace parorb {

// Blocked pairwise accumulation. The evaluation tree depends only on the
// length, never on the thread count or call site, so sums are reproducible
// bit for bit; rounding error grows like log(n) instead of n.
template <class Term>
double pairwise_sum(std::int64_t n, std::int64_t offset, const Term& term) {
  constexpr std::int64_t kBlock = 256;
  if (n <= kBlock) {
    double acc = 0.0;
    for (std::int64_t i = 0; i < n; ++i) acc += term(offset + i);
    return acc;
  }
  const std::int64_t half = n / 2;
  return pairwise_sum(half, offset, term) +
         pairwise_sum(n - half, offset + half, term);
}

inline double stable_sum(std::span<const double> v) {
  return pairwise_sum(static_cast<std::int64_t>(v.size()), 0,
                      [&](std::int64_t i) { return v[i]; });
}

inline double stable_dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  return pairwise_sum(static_cast<std::int64_t>(a.size()), 0,
                      [&](std::int64_t i) { return a[i] * b[i]; });
}

}  // namespace parorb
