#pragma once

// Full-sort retrieval: score every target with the scalar reference kernel,
// sort everything, cut at k.

#include <algorithm>
#include <cmath>
#include <vector>

#include "kgalign/candidate_index.hpp"
#include "kgalign/simd/kernels.hpp"

namespace oracle {

inline double cosine_scalar(std::span<const double> a, std::span<const double> b) {
  const double na = std::sqrt(kgalign::simd::dot_scalar(a.data(), a.data(), a.size()));
  const double nb = std::sqrt(kgalign::simd::dot_scalar(b.data(), b.data(), b.size()));
  if (na == 0.0 || nb == 0.0) return 0.0;
  return kgalign::simd::dot_scalar(a.data(), b.data(), a.size()) / (na * nb);
}

inline std::vector<kgalign::ScoredTarget> full_sort_top_k(const kgalign::EmbeddingMatrix& src,
                                                          kgalign::EntityId source,
                                                          const kgalign::EmbeddingMatrix& tgt,
                                                          std::size_t k) {
  std::vector<kgalign::ScoredTarget> all;
  const auto q = src.vector(source);
  for (std::size_t r = 0; r < tgt.size(); ++r) {
    all.push_back({tgt.ids()[r], cosine_scalar(q, tgt.row(r))});
  }
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.target < b.target;
  });
  all.resize(k);
  return all;
}

}  // namespace oracle
