#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kgalign/kg_store.hpp"
#include "kgalign/rational.hpp"

namespace kgalign {

enum class Side { Source, Target };
enum class TripleKind { Attribute, Relation };

std::string_view to_string(TripleKind kind);

struct IdentifiabilityScore {
  std::uint32_t subject = 0;  // attribute or relation id, local to the entity's KG
  Rational function_degree;
  Rational frequency;
  Rational identifiability;
};

struct SelectedTriple {
  std::uint32_t triple_index = 0;  // into att_triples() or rel_triples()
  IdentifiabilityScore score;
};

struct SelectedTriples {
  Side side = Side::Source;
  EntityId entity = 0;
  TripleKind kind = TripleKind::Attribute;
  std::vector<SelectedTriple> triples;

  bool empty() const noexcept { return triples.empty(); }
  /// Distinct subjects in rank order.
  std::vector<std::uint32_t> subjects() const;
};

/// Identifiability scoring over a source/target KG pair.
///
/// function degree = |distinct heads| / |distinct (head, object)| over the
/// union of both KGs' triples for a subject (subjects are matched across KGs
/// by URI); frequency = share of candidate target entities holding the subject
/// (outgoing triples only for relations); identifiability is their product.
/// Function degrees are computed once at construction.
class TripleSelector {
 public:
  TripleSelector(const KnowledgeGraph& source, const KnowledgeGraph& target);

  const KnowledgeGraph& graph(Side side) const { return side == Side::Source ? *source_ : *target_; }

  /// Throws AttributeUnknown / RelationUnknown when the subject has no triples
  /// in either KG.
  Rational function_degree(TripleKind kind, Side side, std::uint32_t subject) const;
  /// Throws EmptyCandidates.
  Rational frequency(TripleKind kind, Side side, std::uint32_t subject,
                     std::span<const EntityId> candidates) const;
  /// A subject absent from both KGs scores 0.
  IdentifiabilityScore identifiability(TripleKind kind, Side side, std::uint32_t subject,
                                       std::span<const EntityId> candidates) const;

  Rational function_degree_att(Side side, AttributeId a) const {
    return function_degree(TripleKind::Attribute, side, a);
  }
  Rational frequency_att(Side side, AttributeId a, std::span<const EntityId> candidates) const {
    return frequency(TripleKind::Attribute, side, a, candidates);
  }
  Rational identifiability_att(Side side, AttributeId a,
                               std::span<const EntityId> candidates) const {
    return identifiability(TripleKind::Attribute, side, a, candidates).identifiability;
  }
  Rational function_degree_rel(Side side, RelationId r) const {
    return function_degree(TripleKind::Relation, side, r);
  }
  Rational frequency_rel(Side side, RelationId r, std::span<const EntityId> candidates) const {
    return frequency(TripleKind::Relation, side, r, candidates);
  }
  Rational identifiability_rel(Side side, RelationId r,
                               std::span<const EntityId> candidates) const {
    return identifiability(TripleKind::Relation, side, r, candidates).identifiability;
  }

  /// Scores every subject the entity holds (attributes, or outgoing relations)
  /// and keeps all triples of the k best subjects. Order: identifiability
  /// descending, subject id ascending, then triple file order. An entity with
  /// no triples of the kind yields an empty selection.
  SelectedTriples select_top_triples(Side side, EntityId entity,
                                     std::span<const EntityId> candidates, TripleKind kind,
                                     std::size_t k) const;

  /// Debug dump rows: entity_id, kind, subject_uri, fun, freq, identy.
  std::string format_score_dump(Side side, EntityId entity, std::span<const EntityId> candidates,
                                TripleKind kind) const;

 private:
  static constexpr std::uint32_t kNone = UINT32_MAX;

  struct Vocabulary {
    // local id -> global subject, per side
    std::unordered_map<std::uint32_t, std::uint32_t> to_global[2];
    // global subject -> target-local id (kNone when the target lacks it)
    std::vector<std::uint32_t> target_local;
    // global subject -> function degree; den 0 marks "no triples"
    std::vector<std::uint64_t> distinct_heads;
    std::vector<std::uint64_t> distinct_pairs;
  };

  const Vocabulary& vocab(TripleKind kind) const {
    return kind == TripleKind::Attribute ? attributes_ : relations_;
  }
  std::uint32_t global_of(TripleKind kind, Side side, std::uint32_t subject) const;
  bool holds(TripleKind kind, EntityId target_entity, std::uint32_t target_local) const;
  std::vector<std::uint32_t> subjects_of(TripleKind kind, Side side, EntityId entity) const;

  void build_attributes();
  void build_relations();

  const KnowledgeGraph* source_;
  const KnowledgeGraph* target_;
  Vocabulary attributes_;
  Vocabulary relations_;
};

}  // namespace kgalign
