#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace kgalign {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;
using AttributeId = std::uint32_t;

struct EntityRef {
  EntityId id = 0;
  std::string uri;
  std::string label;

  friend bool operator==(const EntityRef&, const EntityRef&) = default;
};

struct RelationalTriple {
  EntityId head = 0;
  RelationId relation = 0;
  EntityId tail = 0;

  friend bool operator==(const RelationalTriple&, const RelationalTriple&) = default;
};

struct AttributeTriple {
  EntityId head = 0;
  AttributeId attribute = 0;
  std::string value;

  friend bool operator==(const AttributeTriple&, const AttributeTriple&) = default;
};

struct GraphStats {
  std::size_t entity_count = 0;
  std::size_t relation_count = 0;
  std::size_t attribute_count = 0;
  std::size_t rel_triple_count = 0;
  std::size_t att_triple_count = 0;

  friend bool operator==(const GraphStats&, const GraphStats&) = default;
};

using EntityMap = std::map<EntityId, EntityRef>;
/// id -> uri, for relations and attributes.
using UriMap = std::map<std::uint32_t, std::string>;

/// Parsed attribute file: interned attribute uris plus the retained triples.
struct AttributeFile {
  UriMap attributes;
  std::vector<AttributeTriple> triples;
  std::size_t skipped_unknown_entity = 0;
};

/// Immutable knowledge graph for one side of an alignment task.
/// Only build_graph() produces one; after that it is safe to share across
/// threads.
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;

  const EntityMap& entities() const noexcept { return entities_; }
  const UriMap& relations() const noexcept { return relations_; }
  const UriMap& attributes() const noexcept { return attributes_; }
  std::span<const RelationalTriple> rel_triples() const noexcept { return rel_triples_; }
  std::span<const AttributeTriple> att_triples() const noexcept { return att_triples_; }

  bool has_entity(EntityId id) const { return entities_.contains(id); }
  /// Throws UnknownEntity.
  const EntityRef& entity(EntityId id) const;
  const std::string& label(EntityId id) const { return entity(id).label; }
  /// Returns nullptr when the uri is not part of this graph.
  const EntityRef* find_by_uri(std::string_view uri) const;

  const std::string& relation_uri(RelationId id) const;
  const std::string& attribute_uri(AttributeId id) const;

  // Per-entity adjacency. Each span lists indexes into att_triples() /
  // rel_triples() in ascending (file) order.
  std::span<const std::uint32_t> attribute_triples_of(EntityId id) const;
  std::span<const std::uint32_t> outgoing_of(EntityId id) const;
  std::span<const std::uint32_t> incoming_of(EntityId id) const;

  friend bool operator==(const KnowledgeGraph& a, const KnowledgeGraph& b);

 private:
  friend KnowledgeGraph build_graph(EntityMap, UriMap, UriMap,
                                    std::vector<RelationalTriple>,
                                    std::vector<AttributeTriple>);

  struct Adjacency {
    std::vector<std::uint32_t> offsets;  // size = dense entity count + 1
    std::vector<std::uint32_t> items;
    std::span<const std::uint32_t> row(std::size_t dense) const;
  };

  std::size_t dense_index(EntityId id) const;

  EntityMap entities_;
  UriMap relations_;
  UriMap attributes_;
  std::vector<RelationalTriple> rel_triples_;
  std::vector<AttributeTriple> att_triples_;

  std::unordered_map<EntityId, std::uint32_t> dense_;
  std::unordered_map<std::string, EntityId> by_uri_;
  Adjacency att_index_;
  Adjacency out_index_;
  Adjacency in_index_;
};

/// `<id>\t<uri>` per line. Throws DuplicateId / ParseError.
EntityMap parse_entity_file(const std::filesystem::path& path);
EntityMap parse_entity_lines(std::string_view contents);

/// Same layout as entity files; used for DBP15K rel_ids_* (optional).
UriMap parse_id_uri_file(const std::filesystem::path& path);

/// `<head>\t<relation>\t<tail>`. Unseen relation ids are added to `relations`
/// as `relation:<id>`. Throws DanglingReference / ParseError.
std::vector<RelationalTriple> parse_relational_triples(const std::filesystem::path& path,
                                                       const EntityMap& entities,
                                                       UriMap& relations);
std::vector<RelationalTriple> parse_relational_lines(std::string_view contents,
                                                     const EntityMap& entities,
                                                     UriMap& relations);

/// `<entity uri or id>\t<attribute uri>\t<literal>`; extra fields are re-joined
/// into the literal with TAB. Lines naming unknown entities are skipped and
/// counted.
AttributeFile parse_attribute_triples(const std::filesystem::path& path,
                                      const EntityMap& entities);
AttributeFile parse_attribute_lines(std::string_view contents, const EntityMap& entities);

/// Throws IntegrityError when a triple references an unknown id.
KnowledgeGraph build_graph(EntityMap entities, UriMap relations, UriMap attributes,
                           std::vector<RelationalTriple> rel_triples,
                           std::vector<AttributeTriple> att_triples);

GraphStats stats(const KnowledgeGraph& graph);

/// Gold alignment, `<source id>\t<target id>` per line, file order preserved.
using GoldAlignment = std::vector<std::pair<EntityId, EntityId>>;
GoldAlignment parse_gold_file(const std::filesystem::path& path);
GoldAlignment parse_gold_lines(std::string_view contents);
std::map<EntityId, EntityId> gold_map(const GoldAlignment& gold);

// Writers produce the same layouts the parsers accept.
std::string format_entity_lines(const KnowledgeGraph& graph);
std::string format_relation_id_lines(const KnowledgeGraph& graph);
std::string format_relational_lines(const KnowledgeGraph& graph);
std::string format_attribute_lines(const KnowledgeGraph& graph);

/// File names of one KG side inside a dataset directory.
struct GraphFiles {
  std::filesystem::path entities;
  std::filesystem::path relations;  // optional; may not exist
  std::filesystem::path rel_triples;
  std::filesystem::path att_triples;
};

/// DBP15K naming: ent_ids_<n>, rel_ids_<n>, triples_<n>, att_triples_<n>.
/// When att_triples_<n> is absent and the directory is named like zh_en, the
/// language-named file (zh_att_triples for side 1) is used instead.
GraphFiles dbp15k_files(const std::filesystem::path& dir, int side_number);

struct LoadedGraph {
  KnowledgeGraph graph;
  std::size_t skipped_attribute_lines = 0;
};

LoadedGraph load_graph(const GraphFiles& files);

void write_graph(const KnowledgeGraph& graph, const GraphFiles& files);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace kgalign
