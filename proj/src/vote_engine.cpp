#include "kgalign/vote_engine.hpp"

#include <algorithm>
#include <future>
#include <numeric>
#include <random>
#include <set>

#include "kgalign/error.hpp"
#include "kgalign/rng.hpp"

namespace kgalign {

namespace {

/// m! saturating at `limit`.
std::size_t factorial_capped(std::size_t m, std::size_t limit) {
  std::size_t f = 1;
  for (std::size_t i = 2; i <= m; ++i) {
    if (f > limit / i) return limit;
    f *= i;
  }
  return std::min(f, limit);
}

}  // namespace

PermutationSample sample_permutations(std::size_t m, std::size_t n, std::uint64_t seed,
                                      bool identity_first) {
  if (m == 0) throw Error(ErrorKind::EmptyCandidates, "cannot permute zero candidates");
  if (n == 0) throw Error(ErrorKind::ValueError, "vote needs at least one round");

  PermutationSample out;
  Permutation identity(m);
  std::iota(identity.begin(), identity.end(), std::size_t{0});

  const std::size_t total = factorial_capped(m, n + 1);
  if (n >= total) {
    out.capped = n > total;
    Permutation p = identity;
    do {
      out.permutations.push_back(p);
    } while (std::next_permutation(p.begin(), p.end()));
    return out;
  }

  std::mt19937_64 rng(seed);
  std::set<Permutation> seen;
  if (identity_first) {
    seen.insert(identity);
    out.permutations.push_back(identity);
  }
  while (out.permutations.size() < n) {
    Permutation p = identity;
    fisher_yates(std::span<std::size_t>(p), rng);
    if (seen.insert(p).second) out.permutations.push_back(std::move(p));
  }
  return out;
}

TallyResult tally(std::span<const std::optional<EntityId>> choices, std::size_t n) {
  if (choices.size() > n) {
    throw Error(ErrorKind::ValueError, std::to_string(choices.size()) + " choices for " +
                                           std::to_string(n) + " rounds");
  }
  TallyResult out;
  for (const auto& c : choices) {
    if (c) ++out.counts[*c];
  }
  std::size_t best = 0;
  std::size_t holders = 0;
  EntityId best_target = 0;
  for (const auto& [target, count] : out.counts) {
    if (count > best) {
      best = count;
      holders = 1;
      best_target = target;
    } else if (count == best) {
      ++holders;
    }
  }
  if (holders == 1 && best >= n / 2) out.decision = Winner{best_target};
  return out;
}

std::optional<EntityId> VoteOutcome::winner() const {
  if (const auto* w = std::get_if<Winner>(&decision)) return w->target;
  return std::nullopt;
}

VoteOutcome run_vote(EntityId source, std::span<const EntityId> candidates, PromptKind kind,
                     const VoteConfig& config, const PromptInputs& inputs, Gateway& gateway) {
  if (candidates.empty()) throw Error(ErrorKind::EmptyCandidates, "vote without candidates");

  const auto sample =
      sample_permutations(candidates.size(), config.rounds, config.seed, config.identity_first);

  // Build every prompt up front so rendering errors surface before any call.
  std::vector<Prompt> prompts;
  prompts.reserve(sample.permutations.size());
  for (const auto& perm : sample.permutations) {
    std::vector<EntityId> ordered(perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i) ordered[i] = candidates[perm[i]];
    prompts.push_back(build_prompt(kind, source, ordered, inputs));
  }

  std::vector<std::future<ChoiceResult>> pending;
  pending.reserve(prompts.size());
  for (std::size_t r = 0; r < prompts.size(); ++r) {
    pending.push_back(std::async(std::launch::async, [&gateway, &prompts, &config, r] {
      return gateway.ask(prompts[r], r, static_cast<std::int64_t>(mix_seed(config.seed, r) >> 1));
    }));
  }

  VoteOutcome out;
  out.kind = kind;
  out.seed = config.seed;
  out.rounds = config.rounds;
  out.capped = sample.capped;
  std::size_t failures = 0;
  std::vector<std::optional<EntityId>> choices;
  for (std::size_t r = 0; r < pending.size(); ++r) {
    VoteRound round;
    round.permutation = sample.permutations[r];
    try {
      round.choice = pending[r].get();
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::TransportError && e.kind() != ErrorKind::ApiError) throw;
      round.failed = true;
      round.choice = ChoiceResult{Abstain{std::string("transport: ") + e.what()}, ""};
      ++failures;
    }
    if (round.choice.chosen()) {
      round.target = candidates[round.permutation[round.choice.index()]];
    }
    choices.push_back(round.target);
    out.per_round.push_back(std::move(round));
  }
  if (failures * 2 > pending.size()) {
    throw Error(ErrorKind::RunAborted, "source " + std::to_string(source) + ": " +
                                           std::to_string(failures) + " of " +
                                           std::to_string(pending.size()) + " rounds failed");
  }
  auto result = tally(choices, config.rounds);
  out.tally = std::move(result.counts);
  out.decision = result.decision;
  return out;
}

}  // namespace kgalign
