#include "kgalign/kg_store.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "kgalign/error.hpp"
#include "kgalign/text.hpp"

namespace kgalign {

namespace {

template <typename Fn>
void for_each_line(std::string_view contents, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < contents.size()) {
    auto end = contents.find('\n', start);
    if (end == std::string_view::npos) end = contents.size();
    std::string_view line = contents.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    if (!line.empty()) fn(line, line_no);
    start = end + 1;
  }
}

bool parse_u32(std::string_view field, std::uint32_t& out) {
  field = text::trim(field);
  if (field.empty()) return false;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
  return ec == std::errc{} && ptr == field.data() + field.size();
}

std::uint32_t require_u32(std::string_view field, std::size_t line_no, const char* what) {
  std::uint32_t v = 0;
  if (!parse_u32(field, v)) {
    throw Error(ErrorKind::ParseError,
                std::string("invalid ") + what + " '" + std::string(field) + "'", line_no);
  }
  return v;
}

std::vector<std::uint32_t> count_offsets(std::size_t dense_count) {
  return std::vector<std::uint32_t>(dense_count + 1, 0);
}

void finish_csr(std::vector<std::uint32_t>& offsets) {
  for (std::size_t i = 1; i < offsets.size(); ++i) offsets[i] += offsets[i - 1];
}

}  // namespace

// ---------------------------------------------------------------------------
// KnowledgeGraph

const EntityRef& KnowledgeGraph::entity(EntityId id) const {
  const auto it = entities_.find(id);
  if (it == entities_.end()) {
    throw Error(ErrorKind::UnknownEntity, "entity id " + std::to_string(id));
  }
  return it->second;
}

const EntityRef* KnowledgeGraph::find_by_uri(std::string_view uri) const {
  const auto it = by_uri_.find(std::string(uri));
  return it == by_uri_.end() ? nullptr : &entities_.at(it->second);
}

const std::string& KnowledgeGraph::relation_uri(RelationId id) const {
  const auto it = relations_.find(id);
  if (it == relations_.end()) {
    throw Error(ErrorKind::RelationUnknown, "relation id " + std::to_string(id));
  }
  return it->second;
}

const std::string& KnowledgeGraph::attribute_uri(AttributeId id) const {
  const auto it = attributes_.find(id);
  if (it == attributes_.end()) {
    throw Error(ErrorKind::AttributeUnknown, "attribute id " + std::to_string(id));
  }
  return it->second;
}

std::span<const std::uint32_t> KnowledgeGraph::Adjacency::row(std::size_t dense) const {
  return std::span<const std::uint32_t>(items).subspan(offsets[dense],
                                                      offsets[dense + 1] - offsets[dense]);
}

std::size_t KnowledgeGraph::dense_index(EntityId id) const {
  const auto it = dense_.find(id);
  if (it == dense_.end()) {
    throw Error(ErrorKind::UnknownEntity, "entity id " + std::to_string(id));
  }
  return it->second;
}

std::span<const std::uint32_t> KnowledgeGraph::attribute_triples_of(EntityId id) const {
  return att_index_.row(dense_index(id));
}

std::span<const std::uint32_t> KnowledgeGraph::outgoing_of(EntityId id) const {
  return out_index_.row(dense_index(id));
}

std::span<const std::uint32_t> KnowledgeGraph::incoming_of(EntityId id) const {
  return in_index_.row(dense_index(id));
}

bool operator==(const KnowledgeGraph& a, const KnowledgeGraph& b) {
  return a.entities_ == b.entities_ && a.relations_ == b.relations_ &&
         a.attributes_ == b.attributes_ && a.rel_triples_ == b.rel_triples_ &&
         a.att_triples_ == b.att_triples_;
}

KnowledgeGraph build_graph(EntityMap entities, UriMap relations, UriMap attributes,
                           std::vector<RelationalTriple> rel_triples,
                           std::vector<AttributeTriple> att_triples) {
  KnowledgeGraph g;
  g.entities_ = std::move(entities);
  g.relations_ = std::move(relations);
  g.attributes_ = std::move(attributes);
  g.rel_triples_ = std::move(rel_triples);
  g.att_triples_ = std::move(att_triples);

  g.dense_.reserve(g.entities_.size());
  g.by_uri_.reserve(g.entities_.size());
  std::uint32_t next = 0;
  for (const auto& [id, ref] : g.entities_) {
    if (ref.id != id) {
      throw Error(ErrorKind::IntegrityError,
                  "entity map key " + std::to_string(id) + " holds id " + std::to_string(ref.id));
    }
    if (ref.uri.empty()) {
      throw Error(ErrorKind::IntegrityError, "entity " + std::to_string(id) + " has empty uri");
    }
    g.dense_.emplace(id, next++);
    g.by_uri_.emplace(ref.uri, id);
  }

  const auto dense_of = [&](EntityId id, const char* role, std::size_t index) {
    const auto it = g.dense_.find(id);
    if (it == g.dense_.end()) {
      throw Error(ErrorKind::IntegrityError, std::string(role) + " entity " + std::to_string(id) +
                                                 " of triple #" + std::to_string(index) +
                                                 " is unknown");
    }
    return it->second;
  };

  const std::size_t n = g.entities_.size();
  g.att_index_.offsets = count_offsets(n);
  g.out_index_.offsets = count_offsets(n);
  g.in_index_.offsets = count_offsets(n);

  for (std::size_t i = 0; i < g.rel_triples_.size(); ++i) {
    const auto& t = g.rel_triples_[i];
    if (!g.relations_.contains(t.relation)) {
      throw Error(ErrorKind::IntegrityError, "relation " + std::to_string(t.relation) +
                                                 " of triple #" + std::to_string(i) +
                                                 " is unknown");
    }
    ++g.out_index_.offsets[dense_of(t.head, "head", i) + 1];
    ++g.in_index_.offsets[dense_of(t.tail, "tail", i) + 1];
  }
  for (std::size_t i = 0; i < g.att_triples_.size(); ++i) {
    const auto& t = g.att_triples_[i];
    if (!g.attributes_.contains(t.attribute)) {
      throw Error(ErrorKind::IntegrityError, "attribute " + std::to_string(t.attribute) +
                                                 " of triple #" + std::to_string(i) +
                                                 " is unknown");
    }
    ++g.att_index_.offsets[dense_of(t.head, "head", i) + 1];
  }

  finish_csr(g.att_index_.offsets);
  finish_csr(g.out_index_.offsets);
  finish_csr(g.in_index_.offsets);
  g.att_index_.items.resize(g.att_triples_.size());
  g.out_index_.items.resize(g.rel_triples_.size());
  g.in_index_.items.resize(g.rel_triples_.size());

  // Filling in triple order keeps every row sorted by triple index.
  std::vector<std::uint32_t> att_fill(g.att_index_.offsets.begin(), g.att_index_.offsets.end() - 1);
  std::vector<std::uint32_t> out_fill(g.out_index_.offsets.begin(), g.out_index_.offsets.end() - 1);
  std::vector<std::uint32_t> in_fill(g.in_index_.offsets.begin(), g.in_index_.offsets.end() - 1);
  for (std::uint32_t i = 0; i < g.rel_triples_.size(); ++i) {
    const auto& t = g.rel_triples_[i];
    g.out_index_.items[out_fill[g.dense_.at(t.head)]++] = i;
    g.in_index_.items[in_fill[g.dense_.at(t.tail)]++] = i;
  }
  for (std::uint32_t i = 0; i < g.att_triples_.size(); ++i) {
    g.att_index_.items[att_fill[g.dense_.at(g.att_triples_[i].head)]++] = i;
  }
  return g;
}

GraphStats stats(const KnowledgeGraph& graph) {
  return GraphStats{
      .entity_count = graph.entities().size(),
      .relation_count = graph.relations().size(),
      .attribute_count = graph.attributes().size(),
      .rel_triple_count = graph.rel_triples().size(),
      .att_triple_count = graph.att_triples().size(),
  };
}

// ---------------------------------------------------------------------------
// Parsers

EntityMap parse_entity_lines(std::string_view contents) {
  EntityMap out;
  for_each_line(contents, [&](std::string_view line, std::size_t line_no) {
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw Error(ErrorKind::ParseError, "expected '<id>\\t<uri>'", line_no);
    }
    const EntityId id = require_u32(line.substr(0, tab), line_no, "id");
    const std::string_view uri = text::trim(line.substr(tab + 1));
    if (uri.empty()) throw Error(ErrorKind::ParseError, "empty uri", line_no);
    EntityRef ref{id, std::string(uri), text::label_from_uri(uri)};
    if (!out.emplace(id, std::move(ref)).second) {
      throw Error(ErrorKind::DuplicateId, "id " + std::to_string(id) + " repeated", line_no);
    }
  });
  return out;
}

EntityMap parse_entity_file(const std::filesystem::path& path) {
  return parse_entity_lines(read_file(path));
}

UriMap parse_id_uri_file(const std::filesystem::path& path) {
  UriMap out;
  for (auto& [id, ref] : parse_entity_file(path)) out.emplace(id, std::move(ref.uri));
  return out;
}

std::vector<RelationalTriple> parse_relational_lines(std::string_view contents,
                                                     const EntityMap& entities,
                                                     UriMap& relations) {
  std::vector<RelationalTriple> out;
  for_each_line(contents, [&](std::string_view line, std::size_t line_no) {
    const auto fields = text::split(line, '\t');
    if (fields.size() != 3) {
      throw Error(ErrorKind::ParseError, "expected 3 tab-separated fields", line_no);
    }
    RelationalTriple t{require_u32(fields[0], line_no, "head id"),
                       require_u32(fields[1], line_no, "relation id"),
                       require_u32(fields[2], line_no, "tail id")};
    for (const EntityId id : {t.head, t.tail}) {
      if (!entities.contains(id)) {
        throw Error(ErrorKind::DanglingReference, "entity id " + std::to_string(id), line_no);
      }
    }
    if (!relations.contains(t.relation)) {
      relations.emplace(t.relation, "relation:" + std::to_string(t.relation));
    }
    out.push_back(t);
  });
  return out;
}

std::vector<RelationalTriple> parse_relational_triples(const std::filesystem::path& path,
                                                       const EntityMap& entities,
                                                       UriMap& relations) {
  return parse_relational_lines(read_file(path), entities, relations);
}

AttributeFile parse_attribute_lines(std::string_view contents, const EntityMap& entities) {
  std::unordered_map<std::string_view, EntityId> by_uri;
  by_uri.reserve(entities.size());
  for (const auto& [id, ref] : entities) by_uri.emplace(ref.uri, id);

  AttributeFile out;
  std::unordered_map<std::string, AttributeId> interned;
  for_each_line(contents, [&](std::string_view line, std::size_t line_no) {
    const auto fields = text::split(line, '\t');
    if (fields.size() < 3) {
      throw Error(ErrorKind::ParseError, "expected at least 3 tab-separated fields", line_no);
    }
    std::optional<EntityId> head;
    if (const auto it = by_uri.find(fields[0]); it != by_uri.end()) {
      head = it->second;
    } else if (std::uint32_t id = 0; parse_u32(fields[0], id) && entities.contains(id)) {
      head = id;
    }
    if (!head) {
      ++out.skipped_unknown_entity;
      return;
    }
    const std::string attr_uri(fields[1]);
    if (attr_uri.empty()) throw Error(ErrorKind::ParseError, "empty attribute uri", line_no);
    auto [it, fresh] = interned.try_emplace(attr_uri, static_cast<AttributeId>(interned.size()));
    if (fresh) out.attributes.emplace(it->second, attr_uri);

    std::string value(fields[2]);
    for (std::size_t i = 3; i < fields.size(); ++i) {
      value.push_back('\t');
      value.append(fields[i]);
    }
    out.triples.push_back(AttributeTriple{*head, it->second, std::move(value)});
  });
  return out;
}

AttributeFile parse_attribute_triples(const std::filesystem::path& path,
                                      const EntityMap& entities) {
  return parse_attribute_lines(read_file(path), entities);
}

GoldAlignment parse_gold_lines(std::string_view contents) {
  GoldAlignment out;
  for_each_line(contents, [&](std::string_view line, std::size_t line_no) {
    const auto fields = text::split(line, '\t');
    if (fields.size() != 2) {
      throw Error(ErrorKind::ParseError, "expected '<source id>\\t<target id>'", line_no);
    }
    out.emplace_back(require_u32(fields[0], line_no, "source id"),
                     require_u32(fields[1], line_no, "target id"));
  });
  return out;
}

GoldAlignment parse_gold_file(const std::filesystem::path& path) {
  return parse_gold_lines(read_file(path));
}

std::map<EntityId, EntityId> gold_map(const GoldAlignment& gold) {
  return std::map<EntityId, EntityId>(gold.begin(), gold.end());
}

// ---------------------------------------------------------------------------
// Writers

std::string format_entity_lines(const KnowledgeGraph& graph) {
  std::string out;
  for (const auto& [id, ref] : graph.entities()) {
    out += std::to_string(id) + '\t' + ref.uri + '\n';
  }
  return out;
}

std::string format_relation_id_lines(const KnowledgeGraph& graph) {
  std::string out;
  for (const auto& [id, uri] : graph.relations()) out += std::to_string(id) + '\t' + uri + '\n';
  return out;
}

std::string format_relational_lines(const KnowledgeGraph& graph) {
  std::string out;
  for (const auto& t : graph.rel_triples()) {
    out += std::to_string(t.head) + '\t' + std::to_string(t.relation) + '\t' +
           std::to_string(t.tail) + '\n';
  }
  return out;
}

std::string format_attribute_lines(const KnowledgeGraph& graph) {
  std::string out;
  for (const auto& t : graph.att_triples()) {
    out += graph.entity(t.head).uri + '\t' + graph.attribute_uri(t.attribute) + '\t' + t.value +
           '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Files

GraphFiles dbp15k_files(const std::filesystem::path& dir, int side_number) {
  const std::string n = std::to_string(side_number);
  GraphFiles files{dir / ("ent_ids_" + n), dir / ("rel_ids_" + n), dir / ("triples_" + n),
                   dir / ("att_triples_" + n)};
  // The public release names attribute files by language: zh_en/zh_att_triples.
  const auto trimmed = dir.has_filename() ? dir : dir.parent_path();
  const std::string name = trimmed.filename().string();
  if (!std::filesystem::exists(files.att_triples) && name.size() == 5 && name[2] == '_') {
    const std::string lang = side_number == 1 ? name.substr(0, 2) : name.substr(3, 2);
    const auto by_lang = dir / (lang + "_att_triples");
    if (std::filesystem::exists(by_lang)) files.att_triples = by_lang;
  }
  return files;
}

LoadedGraph load_graph(const GraphFiles& files) {
  EntityMap entities = parse_entity_file(files.entities);
  UriMap relations;
  if (!files.relations.empty() && std::filesystem::exists(files.relations)) {
    relations = parse_id_uri_file(files.relations);
  }
  auto rel = parse_relational_triples(files.rel_triples, entities, relations);
  AttributeFile att = parse_attribute_triples(files.att_triples, entities);
  LoadedGraph out;
  out.skipped_attribute_lines = att.skipped_unknown_entity;
  out.graph = build_graph(std::move(entities), std::move(relations), std::move(att.attributes),
                          std::move(rel), std::move(att.triples));
  return out;
}

void write_graph(const KnowledgeGraph& graph, const GraphFiles& files) {
  write_file(files.entities, format_entity_lines(graph));
  if (!files.relations.empty()) write_file(files.relations, format_relation_id_lines(graph));
  write_file(files.rel_triples, format_relational_lines(graph));
  write_file(files.att_triples, format_attribute_lines(graph));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error(ErrorKind::IoError, "short write to " + path.string());
}

}  // namespace kgalign
