#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kgalign/kg_store.hpp"
#include "kgalign/simd/kernels.hpp"

namespace kgalign {

/// Row-major dense embeddings keyed by entity id. Rows are kept in file order.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  /// Throws ShapeError on ragged rows or duplicate ids, ValueError on NaN/Inf.
  EmbeddingMatrix(std::size_t dim, std::vector<EntityId> ids, std::vector<double> values);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return ids_.size(); }
  std::span<const EntityId> ids() const noexcept { return ids_; }
  std::span<const double> values() const noexcept { return values_; }
  /// Euclidean norms, computed with the active dot kernel.
  std::span<const double> norms() const noexcept { return norms_; }

  bool contains(EntityId id) const { return row_of_.contains(id); }
  /// Throws UnknownEntity.
  std::size_t row_index(EntityId id) const;
  std::span<const double> row(std::size_t index) const {
    return std::span<const double>(values_).subspan(index * dim_, dim_);
  }
  std::span<const double> vector(EntityId id) const { return row(row_index(id)); }

  EmbeddingMatrix scaled(double factor) const;

 private:
  std::size_t dim_ = 0;
  std::vector<EntityId> ids_;
  std::vector<double> values_;
  std::vector<double> norms_;
  std::unordered_map<EntityId, std::size_t> row_of_;
};

/// Header `<count> <dim>`, then `<id> <v1> ... <v_dim>` per line.
EmbeddingMatrix load_embeddings(const std::filesystem::path& path);
EmbeddingMatrix parse_embeddings(std::string_view contents);
std::string format_embeddings(const EmbeddingMatrix& matrix);

struct ScoredTarget {
  EntityId target = 0;
  double score = 0.0;

  friend bool operator==(const ScoredTarget&, const ScoredTarget&) = default;
};

/// Ranking order: score descending, then target id ascending.
inline bool ranks_before(const ScoredTarget& a, const ScoredTarget& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.target < b.target;
}

struct CandidateSet {
  EntityId source = 0;
  std::vector<ScoredTarget> candidates;

  std::size_t k() const noexcept { return candidates.size(); }
  std::vector<EntityId> target_ids() const;
  bool contains(EntityId target) const;

  friend bool operator==(const CandidateSet&, const CandidateSet&) = default;
};

/// Cosine similarity; a zero vector scores 0 against everything.
double cosine(std::span<const double> a, double norm_a, std::span<const double> b, double norm_b);

/// Source of similarity scores for candidate retrieval.
class SimilarityProvider {
 public:
  virtual ~SimilarityProvider() = default;
  virtual double score(EntityId source, EntityId target) const = 0;
  /// Every scored target for `source`, in any order. Throws UnknownEntity.
  virtual std::vector<ScoredTarget> scores_for(EntityId source) const = 0;
  virtual std::size_t target_count() const = 0;
};

class EmbeddingSimilarity final : public SimilarityProvider {
 public:
  EmbeddingSimilarity(const EmbeddingMatrix& source, const EmbeddingMatrix& target,
                      simd::Isa isa = simd::active_isa());

  double score(EntityId source, EntityId target) const override;
  std::vector<ScoredTarget> scores_for(EntityId source) const override;
  std::size_t target_count() const override { return target_->size(); }

 private:
  const EmbeddingMatrix* source_;
  const EmbeddingMatrix* target_;
  simd::Isa isa_;
};

/// `source_id\ttarget_id\tscore` TSV; unlisted pairs are not candidates.
class PrecomputedSimilarity final : public SimilarityProvider {
 public:
  static PrecomputedSimilarity load(const std::filesystem::path& path);
  static PrecomputedSimilarity parse(std::string_view contents);

  double score(EntityId source, EntityId target) const override;
  std::vector<ScoredTarget> scores_for(EntityId source) const override;
  std::size_t target_count() const override { return target_count_; }

 private:
  std::map<EntityId, std::vector<ScoredTarget>> rows_;
  std::size_t target_count_ = 0;
};

/// Keeps the k best of `scored` under ranks_before, in ranked order.
std::vector<ScoredTarget> select_top(std::vector<ScoredTarget> scored, std::size_t k);

/// Top-k targets for `source`. k must not exceed the provider's target count
/// (ShapeError); a precomputed provider may return fewer when it lists fewer.
CandidateSet top_k(EntityId source, std::size_t k, const SimilarityProvider& provider);
CandidateSet top_k(EntityId source, std::size_t k, const EmbeddingMatrix& source_matrix,
                   const EmbeddingMatrix& target_matrix);

struct RecallReport {
  double recall = 0.0;
  std::size_t evaluated = 0;
  std::size_t hits = 0;
  std::vector<EntityId> missing_gold;
};

/// Fraction of candidate sets containing their gold target. Sources without a
/// gold entry are skipped and listed. Throws EmptyEval.
RecallReport recall_at_k(std::span<const CandidateSet> sets,
                         const std::map<EntityId, EntityId>& gold);

std::string format_candidate_lines(std::span<const CandidateSet> sets);

}  // namespace kgalign
