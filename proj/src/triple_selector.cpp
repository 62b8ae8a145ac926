#include "kgalign/triple_selector.hpp"

#include <algorithm>
#include <tuple>

#include "kgalign/error.hpp"

namespace kgalign {

std::string_view to_string(TripleKind kind) {
  return kind == TripleKind::Attribute ? "attribute" : "relation";
}

std::vector<std::uint32_t> SelectedTriples::subjects() const {
  std::vector<std::uint32_t> out;
  for (const auto& t : triples) {
    if (out.empty() || out.back() != t.score.subject) out.push_back(t.score.subject);
  }
  return out;
}

namespace {

int side_index(Side side) { return side == Side::Source ? 0 : 1; }

// Global subject ids: source subjects first (ascending local id), then
// target-only uris.
template <typename Vocab>
void intern_subjects(Vocab& v, const UriMap& source, const UriMap& target) {
  std::unordered_map<std::string, std::uint32_t> by_uri;
  const auto intern = [&](const std::string& uri) {
    auto [it, fresh] = by_uri.try_emplace(uri, static_cast<std::uint32_t>(by_uri.size()));
    if (fresh) v.target_local.push_back(UINT32_MAX);
    return it->second;
  };
  for (const auto& [id, uri] : source) v.to_global[0].emplace(id, intern(uri));
  for (const auto& [id, uri] : target) {
    const std::uint32_t g = intern(uri);
    v.to_global[1].emplace(id, g);
    v.target_local[g] = id;
  }
  v.distinct_heads.assign(by_uri.size(), 0);
  v.distinct_pairs.assign(by_uri.size(), 0);
}

}  // namespace

TripleSelector::TripleSelector(const KnowledgeGraph& source, const KnowledgeGraph& target)
    : source_(&source), target_(&target) {
  build_attributes();
  build_relations();
}

void TripleSelector::build_attributes() {
  intern_subjects(attributes_, source_->attributes(), target_->attributes());

  struct Row {
    std::uint32_t global;
    int side;
    EntityId head;
    const std::string* value;
  };
  std::vector<Row> rows;
  rows.reserve(source_->att_triples().size() + target_->att_triples().size());
  for (const Side side : {Side::Source, Side::Target}) {
    const int s = side_index(side);
    for (const auto& t : graph(side).att_triples()) {
      rows.push_back(Row{attributes_.to_global[s].at(t.attribute), s, t.head, &t.value});
    }
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return std::tie(a.global, a.side, a.head, *a.value) <
           std::tie(b.global, b.side, b.head, *b.value);
  });
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row& r = rows[i];
    const bool new_head = i == 0 || rows[i - 1].global != r.global ||
                          rows[i - 1].side != r.side || rows[i - 1].head != r.head;
    if (new_head) ++attributes_.distinct_heads[r.global];
    if (new_head || *rows[i - 1].value != *r.value) ++attributes_.distinct_pairs[r.global];
  }
}

void TripleSelector::build_relations() {
  intern_subjects(relations_, source_->relations(), target_->relations());

  struct Row {
    std::uint32_t global;
    int side;
    EntityId head;
    EntityId tail;
  };
  std::vector<Row> rows;
  rows.reserve(source_->rel_triples().size() + target_->rel_triples().size());
  for (const Side side : {Side::Source, Side::Target}) {
    const int s = side_index(side);
    for (const auto& t : graph(side).rel_triples()) {
      rows.push_back(Row{relations_.to_global[s].at(t.relation), s, t.head, t.tail});
    }
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return std::tie(a.global, a.side, a.head, a.tail) < std::tie(b.global, b.side, b.head, b.tail);
  });
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row& r = rows[i];
    const bool new_head = i == 0 || rows[i - 1].global != r.global ||
                          rows[i - 1].side != r.side || rows[i - 1].head != r.head;
    if (new_head) ++relations_.distinct_heads[r.global];
    if (new_head || rows[i - 1].tail != r.tail) ++relations_.distinct_pairs[r.global];
  }
}

std::uint32_t TripleSelector::global_of(TripleKind kind, Side side, std::uint32_t subject) const {
  const auto& map = vocab(kind).to_global[side_index(side)];
  const auto it = map.find(subject);
  return it == map.end() ? kNone : it->second;
}

Rational TripleSelector::function_degree(TripleKind kind, Side side, std::uint32_t subject) const {
  const std::uint32_t g = global_of(kind, side, subject);
  const auto& v = vocab(kind);
  if (g == kNone || v.distinct_pairs[g] == 0) {
    throw Error(kind == TripleKind::Attribute ? ErrorKind::AttributeUnknown
                                              : ErrorKind::RelationUnknown,
                std::string(to_string(kind)) + " " + std::to_string(subject) +
                    " has no triples in either KG");
  }
  return Rational(v.distinct_heads[g], v.distinct_pairs[g]);
}

bool TripleSelector::holds(TripleKind kind, EntityId target_entity,
                           std::uint32_t target_local) const {
  if (kind == TripleKind::Attribute) {
    for (const auto idx : target_->attribute_triples_of(target_entity)) {
      if (target_->att_triples()[idx].attribute == target_local) return true;
    }
  } else {
    for (const auto idx : target_->outgoing_of(target_entity)) {
      if (target_->rel_triples()[idx].relation == target_local) return true;
    }
  }
  return false;
}

Rational TripleSelector::frequency(TripleKind kind, Side side, std::uint32_t subject,
                                   std::span<const EntityId> candidates) const {
  std::vector<EntityId> distinct(candidates.begin(), candidates.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.empty()) throw Error(ErrorKind::EmptyCandidates, "frequency over empty C_e");

  const std::uint32_t g = global_of(kind, side, subject);
  const std::uint32_t local = g == kNone ? kNone : vocab(kind).target_local[g];
  std::uint64_t holders = 0;
  if (local != kNone) {
    for (const EntityId c : distinct) {
      if (holds(kind, c, local)) ++holders;
    }
  }
  return Rational(holders, distinct.size());
}

IdentifiabilityScore TripleSelector::identifiability(TripleKind kind, Side side,
                                                     std::uint32_t subject,
                                                     std::span<const EntityId> candidates) const {
  IdentifiabilityScore out;
  out.subject = subject;
  out.frequency = frequency(kind, side, subject, candidates);
  const std::uint32_t g = global_of(kind, side, subject);
  if (g == kNone || vocab(kind).distinct_pairs[g] == 0) return out;
  out.function_degree = function_degree(kind, side, subject);
  out.identifiability = out.function_degree * out.frequency;
  return out;
}

std::vector<std::uint32_t> TripleSelector::subjects_of(TripleKind kind, Side side,
                                                       EntityId entity) const {
  const KnowledgeGraph& g = graph(side);
  std::vector<std::uint32_t> subjects;
  if (kind == TripleKind::Attribute) {
    for (const auto idx : g.attribute_triples_of(entity)) {
      subjects.push_back(g.att_triples()[idx].attribute);
    }
  } else {
    for (const auto idx : g.outgoing_of(entity)) subjects.push_back(g.rel_triples()[idx].relation);
  }
  std::sort(subjects.begin(), subjects.end());
  subjects.erase(std::unique(subjects.begin(), subjects.end()), subjects.end());
  return subjects;
}

SelectedTriples TripleSelector::select_top_triples(Side side, EntityId entity,
                                                   std::span<const EntityId> candidates,
                                                   TripleKind kind, std::size_t k) const {
  if (k == 0) throw Error(ErrorKind::ValueError, "k must be at least 1");
  SelectedTriples out{side, entity, kind, {}};
  const KnowledgeGraph& g = graph(side);
  const auto subjects = subjects_of(kind, side, entity);
  if (subjects.empty()) return out;

  std::vector<IdentifiabilityScore> scored;
  scored.reserve(subjects.size());
  for (const auto s : subjects) scored.push_back(identifiability(kind, side, s, candidates));
  std::stable_sort(scored.begin(), scored.end(),
                   [](const IdentifiabilityScore& a, const IdentifiabilityScore& b) {
                     if (a.identifiability != b.identifiability) {
                       return a.identifiability > b.identifiability;
                     }
                     return a.subject < b.subject;
                   });
  if (scored.size() > k) scored.resize(k);

  const auto rows = kind == TripleKind::Attribute ? g.attribute_triples_of(entity)
                                                  : g.outgoing_of(entity);
  for (const auto& s : scored) {
    for (const auto idx : rows) {
      const std::uint32_t subject = kind == TripleKind::Attribute
                                        ? g.att_triples()[idx].attribute
                                        : g.rel_triples()[idx].relation;
      if (subject == s.subject) out.triples.push_back(SelectedTriple{idx, s});
    }
  }
  return out;
}

std::string TripleSelector::format_score_dump(Side side, EntityId entity,
                                              std::span<const EntityId> candidates,
                                              TripleKind kind) const {
  const KnowledgeGraph& g = graph(side);
  std::string out;
  for (const auto s : subjects_of(kind, side, entity)) {
    const auto score = identifiability(kind, side, s, candidates);
    const std::string& uri =
        kind == TripleKind::Attribute ? g.attribute_uri(s) : g.relation_uri(s);
    out += std::to_string(entity) + '\t' + std::string(to_string(kind)) + '\t' + uri + '\t' +
           score.function_degree.to_string() + '\t' + score.frequency.to_string() + '\t' +
           score.identifiability.to_string() + '\n';
  }
  return out;
}

}  // namespace kgalign
