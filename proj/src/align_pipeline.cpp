#include "kgalign/align_pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <random>
#include <thread>

#include <json.hpp>

#include "kgalign/error.hpp"
#include "kgalign/rng.hpp"

namespace kgalign {

using ojson = nlohmann::ordered_json;

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::AttributeStage: return "attribute";
    case Stage::RelationStage: return "relation";
    case Stage::Fallback: return "fallback";
    case Stage::Unresolved: return "unresolved";
    case Stage::KnowledgeStage: return "knowledge";
  }
  return "unknown";
}

std::string_view to_string(FallbackPolicy policy) {
  return policy == FallbackPolicy::TopSimilarity ? "top-similarity" : "none";
}

std::string_view to_string(CandidateOrder order) {
  switch (order) {
    case CandidateOrder::Similarity: return "similarity";
    case CandidateOrder::Random: return "random";
    case CandidateOrder::Reversed: return "reversed";
  }
  return "unknown";
}

FallbackPolicy fallback_from_string(std::string_view s) {
  if (s == "top-similarity" || s == "top" || s == "TopSimilarity") {
    return FallbackPolicy::TopSimilarity;
  }
  if (s == "none" || s == "None") return FallbackPolicy::None;
  throw Error(ErrorKind::ConfigError, "unknown fallback policy '" + std::string(s) + "'");
}

CandidateOrder candidate_order_from_string(std::string_view s) {
  if (s == "similarity") return CandidateOrder::Similarity;
  if (s == "random") return CandidateOrder::Random;
  if (s == "reversed" || s == "reverse") return CandidateOrder::Reversed;
  throw Error(ErrorKind::ConfigError, "unknown candidate order '" + std::string(s) + "'");
}

std::vector<EntityId> presentation_order(const CandidateSet& candidates, CandidateOrder order,
                                         std::uint64_t seed) {
  std::vector<EntityId> ids = candidates.target_ids();
  switch (order) {
    case CandidateOrder::Similarity:
      break;
    case CandidateOrder::Reversed:
      std::reverse(ids.begin(), ids.end());
      break;
    case CandidateOrder::Random: {
      std::mt19937_64 rng(mix_seed(seed, candidates.source));
      fisher_yates(std::span<EntityId>(ids), rng);
      break;
    }
  }
  return ids;
}

namespace {

bool has_triples(const KnowledgeGraph& g, EntityId e, TripleKind kind) {
  return kind == TripleKind::Attribute ? !g.attribute_triples_of(e).empty()
                                       : !g.outgoing_of(e).empty();
}

bool stage_applicable(EntityId source, std::span<const EntityId> candidates, TripleKind kind,
                      const AlignmentContext& ctx) {
  if (!has_triples(ctx.source_graph, source, kind)) return false;
  return std::any_of(candidates.begin(), candidates.end(),
                     [&](EntityId c) { return has_triples(ctx.target_graph, c, kind); });
}

Stage stage_for(PromptKind kind) {
  switch (kind) {
    case PromptKind::AttributeAware: return Stage::AttributeStage;
    case PromptKind::RelationAware: return Stage::RelationStage;
    case PromptKind::KnowledgeDriven: return Stage::KnowledgeStage;
  }
  return Stage::Unresolved;
}

StageRecord run_stage(EntityId source, std::span<const EntityId> similarity_order,
                      std::span<const EntityId> presented, PromptKind kind,
                      const PipelineConfig& config, const AlignmentContext& ctx) {
  const Stage stage = stage_for(kind);
  StageRecord record{stage, false, std::nullopt};
  PromptInputs inputs;
  inputs.source_graph = &ctx.source_graph;
  inputs.target_graph = &ctx.target_graph;
  inputs.layout = &config.layout;
  inputs.instruction = config.instruction;
  inputs.extended_labels = config.extended_labels;

  SelectionMap source_sel;
  SelectionMap target_sel;
  if (kind != PromptKind::KnowledgeDriven) {
    const TripleKind triples =
        kind == PromptKind::AttributeAware ? TripleKind::Attribute : TripleKind::Relation;
    if (!stage_applicable(source, similarity_order, triples, ctx)) {
      record.skipped = true;
      return record;
    }
    const std::size_t k =
        triples == TripleKind::Attribute ? config.k_attributes : config.k_relations;
    source_sel.emplace(source, ctx.selector.select_top_triples(Side::Source, source,
                                                                similarity_order, triples, k));
    for (const EntityId c : similarity_order) {
      target_sel.emplace(c, ctx.selector.select_top_triples(Side::Target, c, similarity_order,
                                                             triples, k));
    }
    inputs.source_selection = &source_sel;
    inputs.target_selection = &target_sel;
  }

  VoteConfig vote = config.vote;
  vote.seed = mix_seed(mix_seed(config.vote.seed, source), static_cast<std::uint64_t>(stage));
  record.vote = run_vote(source, presented, kind, vote, inputs, ctx.gateway);
  return record;
}

}  // namespace

AlignmentDecision align_entity(EntityId source, const PipelineConfig& config,
                               const AlignmentContext& ctx) {
  if (config.k_candidates == 0 || config.k_attributes == 0 || config.k_relations == 0) {
    throw Error(ErrorKind::ConfigError, "k values must be at least 1");
  }
  AlignmentDecision d;
  d.source = source;
  d.candidates = top_k(source, config.k_candidates, ctx.similarity);
  if (d.candidates.candidates.empty()) {
    throw Error(ErrorKind::EmptyCandidates, "no candidates for source " + std::to_string(source));
  }
  d.presented = presentation_order(d.candidates, config.order, config.order_seed);
  const auto similarity_order = d.candidates.target_ids();

  std::vector<PromptKind> kinds{PromptKind::AttributeAware, PromptKind::RelationAware};
  if (config.only_kind) kinds = {*config.only_kind};
  for (const PromptKind kind : kinds) {
    StageRecord record = run_stage(source, similarity_order, d.presented, kind, config, ctx);
    const auto winner = record.vote ? record.vote->winner() : std::nullopt;
    const Stage stage = record.stage;
    d.stages.push_back(std::move(record));
    if (winner) {
      d.predicted = winner;
      d.stage = stage;
      return d;
    }
  }
  if (config.fallback == FallbackPolicy::TopSimilarity) {
    d.predicted = similarity_order.front();
    d.stage = Stage::Fallback;
  } else {
    d.stage = Stage::Unresolved;
  }
  return d;
}

BatchResult align_all(std::span<const EntityId> sources, const PipelineConfig& config,
                      const AlignmentContext& ctx) {
  std::vector<std::optional<AlignmentDecision>> slots(sources.size());
  std::vector<std::optional<AbortRecord>> aborted(sources.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr fatal;
  std::mutex fatal_mutex;

  const auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= sources.size()) return;
      try {
        slots[i] = align_entity(sources[i], config, ctx);
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::RunAborted) {
          aborted[i] = AbortRecord{sources[i], e.what()};
          continue;
        }
        std::lock_guard lock(fatal_mutex);
        if (!fatal) fatal = std::current_exception();
        next.store(sources.size());
        return;
      } catch (...) {
        std::lock_guard lock(fatal_mutex);
        if (!fatal) fatal = std::current_exception();
        next.store(sources.size());
        return;
      }
    }
  };

  const std::size_t width = std::clamp<std::size_t>(config.parallelism, 1, 256);
  if (width == 1 || sources.size() <= 1) {
    worker();
  } else {
    std::vector<std::jthread> threads;
    for (std::size_t t = 0; t < std::min(width, sources.size()); ++t) threads.emplace_back(worker);
  }
  if (fatal) std::rethrow_exception(fatal);

  BatchResult out;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    if (slots[i]) {
      ++out.stage_counts[slots[i]->stage];
      out.decisions.push_back(std::move(*slots[i]));
    } else if (aborted[i]) {
      out.aborts.push_back(std::move(*aborted[i]));
    }
  }
  return out;
}

HitsReport hits_at_1(std::span<const AlignmentDecision> decisions,
                     const std::map<EntityId, EntityId>& gold) {
  if (decisions.empty()) throw Error(ErrorKind::EmptyEval, "no decisions to evaluate");
  HitsReport r;
  std::size_t answered = 0;
  std::size_t answered_correct = 0;
  for (const auto& d : decisions) {
    const auto it = gold.find(d.source);
    if (it == gold.end()) {
      throw Error(ErrorKind::ValueError, "no gold target for source " + std::to_string(d.source));
    }
    ++r.evaluated;
    if (!d.predicted) {
      ++r.unresolved;
      continue;
    }
    ++answered;
    if (*d.predicted == it->second) {
      ++r.correct;
      ++answered_correct;
    }
  }
  r.hits_at_1 = static_cast<double>(r.correct) / static_cast<double>(r.evaluated);
  r.answered_accuracy =
      answered == 0 ? 0.0 : static_cast<double>(answered_correct) / static_cast<double>(answered);
  return r;
}

namespace {

ojson vote_json(const VoteOutcome& v) {
  ojson rounds = ojson::array();
  for (const auto& r : v.per_round) {
    ojson round;
    round["permutation"] = r.permutation;
    round["outcome"] = r.choice.describe();
    round["target"] = r.target ? ojson(*r.target) : ojson(nullptr);
    round["failed"] = r.failed;
    round["raw_response"] = r.choice.raw_response;
    rounds.push_back(std::move(round));
  }
  ojson tally = ojson::array();
  for (const auto& [target, count] : v.tally) tally.push_back(ojson::array({target, count}));
  ojson out;
  out["prompt_kind"] = std::string(to_string(v.kind));
  out["seed"] = v.seed;
  out["rounds"] = v.rounds;
  out["threshold"] = v.rounds / 2;
  out["capped"] = v.capped;
  out["per_round"] = std::move(rounds);
  out["tally"] = std::move(tally);
  out["winner"] = v.winner() ? ojson(*v.winner()) : ojson(nullptr);
  return out;
}

}  // namespace

std::string decision_json(const AlignmentDecision& d) {
  ojson candidates = ojson::array();
  for (const auto& c : d.candidates.candidates) {
    candidates.push_back(ojson::array({c.target, c.score}));
  }
  ojson stages = ojson::array();
  for (const auto& s : d.stages) {
    ojson rec;
    rec["stage"] = std::string(to_string(s.stage));
    rec["skipped"] = s.skipped;
    rec["vote"] = s.vote ? vote_json(*s.vote) : ojson(nullptr);
    stages.push_back(std::move(rec));
  }
  ojson out;
  out["source"] = d.source;
  out["predicted"] = d.predicted ? ojson(*d.predicted) : ojson(nullptr);
  out["stage"] = std::string(to_string(d.stage));
  out["candidates"] = std::move(candidates);
  out["presented"] = d.presented;
  out["stages"] = std::move(stages);
  return out.dump();
}

std::string format_decisions_jsonl(std::span<const AlignmentDecision> decisions) {
  std::string out;
  for (const auto& d : decisions) {
    out += decision_json(d);
    out += '\n';
  }
  return out;
}

}  // namespace kgalign
