#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "kgalign/candidate_index.hpp"
#include "kgalign/llm_gateway.hpp"
#include "kgalign/prompt_forge.hpp"

namespace kgalign {

struct VoteConfig {
  std::size_t rounds = 5;  // n
  std::uint64_t seed = 0;
  /// Keep the caller's candidate order as the first round.
  bool identity_first = true;

  std::size_t threshold() const noexcept { return rounds / 2; }
};

using Permutation = std::vector<std::size_t>;

struct PermutationSample {
  std::vector<Permutation> permutations;
  /// Set when n exceeded m! and every permutation was returned instead.
  bool capped = false;
};

/// n distinct permutations of 0..m-1, deterministic in `seed`. Draws are
/// uniform without replacement; with identity_first the identity is fixed as
/// the first entry. If n >= m! all m! permutations come back in lexicographic
/// order.
PermutationSample sample_permutations(std::size_t m, std::size_t n, std::uint64_t seed,
                                      bool identity_first = true);

struct Winner {
  EntityId target = 0;
  friend bool operator==(const Winner&, const Winner&) = default;
};
struct NoConsensus {
  friend bool operator==(const NoConsensus&, const NoConsensus&) = default;
};
using Decision = std::variant<Winner, NoConsensus>;

struct TallyResult {
  std::map<EntityId, std::size_t> counts;
  Decision decision = NoConsensus{};
};

/// Counts the non-empty choices. Winner iff one target holds the strict
/// maximum and that count is at least floor(n / 2). Throws ValueError when
/// there are more choices than rounds.
TallyResult tally(std::span<const std::optional<EntityId>> choices, std::size_t n);

struct VoteRound {
  Permutation permutation;
  ChoiceResult choice;
  std::optional<EntityId> target;  // choice mapped back through the permutation
  bool failed = false;             // transport/API failure
};

struct VoteOutcome {
  PromptKind kind = PromptKind::KnowledgeDriven;
  std::uint64_t seed = 0;
  std::size_t rounds = 0;  // configured n
  bool capped = false;
  std::vector<VoteRound> per_round;
  std::map<EntityId, std::size_t> tally;
  Decision decision = NoConsensus{};

  std::optional<EntityId> winner() const;
};

/// One prompt per sampled permutation of `candidates`, asked concurrently
/// through the gateway. Abstentions and failed rounds add no vote. Throws
/// RunAborted when more than half of the rounds fail in transport.
VoteOutcome run_vote(EntityId source, std::span<const EntityId> candidates, PromptKind kind,
                     const VoteConfig& config, const PromptInputs& inputs, Gateway& gateway);

inline VoteOutcome run_vote(EntityId source, const CandidateSet& candidates, PromptKind kind,
                            const VoteConfig& config, const PromptInputs& inputs,
                            Gateway& gateway) {
  const auto ids = candidates.target_ids();
  return run_vote(source, ids, kind, config, inputs, gateway);
}

}  // namespace kgalign
