#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kgalign/candidate_index.hpp"
#include "kgalign/llm_gateway.hpp"
#include "kgalign/prompt_forge.hpp"
#include "kgalign/triple_selector.hpp"
#include "kgalign/vote_engine.hpp"

namespace kgalign {

/// KnowledgeStage only occurs with PipelineConfig::only_kind (experiments).
enum class Stage { AttributeStage, RelationStage, Fallback, Unresolved, KnowledgeStage };
enum class FallbackPolicy { TopSimilarity, None };
/// Order in which candidates are presented to the model.
enum class CandidateOrder { Similarity, Random, Reversed };

std::string_view to_string(Stage stage);
std::string_view to_string(FallbackPolicy policy);
std::string_view to_string(CandidateOrder order);
FallbackPolicy fallback_from_string(std::string_view s);
CandidateOrder candidate_order_from_string(std::string_view s);

struct PipelineConfig {
  std::size_t k_candidates = 10;
  std::size_t k_attributes = 5;
  std::size_t k_relations = 5;
  VoteConfig vote;
  FallbackPolicy fallback = FallbackPolicy::TopSimilarity;
  CandidateOrder order = CandidateOrder::Similarity;
  std::uint64_t order_seed = 0;
  /// Source entities aligned concurrently.
  std::size_t parallelism = 4;
  /// Experiment mode: one vote with this prompt kind replaces the two stages.
  std::optional<PromptKind> only_kind;
  PromptTemplate layout;
  std::string instruction = std::string(kDefaultInstruction);
  /// Label options past Z as AA, AB, ... instead of raising TooManyOptions.
  bool extended_labels = false;
};

/// Shared, read-only state for a run (the gateway is internally synchronized).
struct AlignmentContext {
  const KnowledgeGraph& source_graph;
  const KnowledgeGraph& target_graph;
  const SimilarityProvider& similarity;
  const TripleSelector& selector;
  Gateway& gateway;
};

struct StageRecord {
  Stage stage = Stage::AttributeStage;
  bool skipped = false;                 // no triples of the kind to show
  std::optional<VoteOutcome> vote;
};

struct AlignmentDecision {
  EntityId source = 0;
  std::optional<EntityId> predicted;
  Stage stage = Stage::Unresolved;
  CandidateSet candidates;              // similarity order
  std::vector<EntityId> presented;      // order shown to the model
  std::vector<StageRecord> stages;
};

/// Candidate order shown to the model; deterministic in (order, seed, source).
std::vector<EntityId> presentation_order(const CandidateSet& candidates, CandidateOrder order,
                                         std::uint64_t seed);

/// Attribute-stage vote, then relation-stage vote, then the fallback policy.
/// A stage is skipped when the source, or every candidate, lacks triples of
/// its kind. RunAborted propagates.
AlignmentDecision align_entity(EntityId source, const PipelineConfig& config,
                               const AlignmentContext& ctx);

struct AbortRecord {
  EntityId source = 0;
  std::string message;
};

struct BatchResult {
  std::vector<AlignmentDecision> decisions;  // input order, aborted sources omitted
  std::vector<AbortRecord> aborts;
  std::map<Stage, std::size_t> stage_counts;
};

BatchResult align_all(std::span<const EntityId> sources, const PipelineConfig& config,
                      const AlignmentContext& ctx);

struct HitsReport {
  double hits_at_1 = 0.0;          // Unresolved counts as wrong
  double answered_accuracy = 0.0;  // over decisions with a prediction
  std::size_t evaluated = 0;
  std::size_t correct = 0;
  std::size_t unresolved = 0;
};

/// Throws EmptyEval, and ValueError for a decision whose source has no gold.
HitsReport hits_at_1(std::span<const AlignmentDecision> decisions,
                     const std::map<EntityId, EntityId>& gold);

/// One JSON object (single line, no trailing newline) per decision.
std::string decision_json(const AlignmentDecision& decision);
std::string format_decisions_jsonl(std::span<const AlignmentDecision> decisions);

}  // namespace kgalign
