#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "kgalign/kg_store.hpp"
#include "kgalign/rng.hpp"

namespace kgtest {

using namespace kgalign;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("kgalign_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

struct RandomPairSpec {
  std::size_t max_entities = 50;
  std::size_t attribute_vocab = 8;
  std::size_t relation_vocab = 6;
  std::size_t values = 4;  // small value range forces repeated pairs
};

struct RandomPair {
  KnowledgeGraph source;
  KnowledgeGraph target;
};

/// Small KG pair with shared and side-only subject uris, duplicate triples
/// and entities without triples.
inline KnowledgeGraph random_graph(std::mt19937_64& rng, const RandomPairSpec& spec, int side,
                                   EntityId id_base) {
  const std::size_t n = 1 + uniform_below(rng, spec.max_entities);
  EntityMap entities;
  for (std::size_t i = 0; i < n; ++i) {
    const EntityId id = id_base + static_cast<EntityId>(i);
    const std::string uri = "http://kg" + std::to_string(side) + ".test/e" + std::to_string(i);
    entities.emplace(id, EntityRef{id, uri, "e" + std::to_string(i)});
  }
  // Subject uris: ids 0..vocab-1; uri index shared for the lower half, side
  // specific for the upper half.
  const auto subject_uri = [&](const char* kind, std::size_t j) {
    if (j < (kind[0] == 'a' ? spec.attribute_vocab : spec.relation_vocab) / 2) {
      return std::string("http://shared.test/") + kind + std::to_string(j);
    }
    return "http://kg" + std::to_string(side) + ".test/" + kind + std::to_string(j);
  };
  UriMap attributes, relations;
  std::vector<AttributeTriple> att;
  std::vector<RelationalTriple> rel;
  const std::size_t att_count = uniform_below(rng, 3 * n + 1);
  for (std::size_t t = 0; t < att_count; ++t) {
    const auto a = static_cast<AttributeId>(uniform_below(rng, spec.attribute_vocab));
    attributes.emplace(a, subject_uri("attr", a));
    att.push_back(AttributeTriple{id_base + static_cast<EntityId>(uniform_below(rng, n)), a,
                                  "v" + std::to_string(uniform_below(rng, spec.values))});
  }
  const std::size_t rel_count = uniform_below(rng, 3 * n + 1);
  for (std::size_t t = 0; t < rel_count; ++t) {
    const auto r = static_cast<RelationId>(uniform_below(rng, spec.relation_vocab));
    relations.emplace(r, subject_uri("rel", r));
    rel.push_back(RelationalTriple{id_base + static_cast<EntityId>(uniform_below(rng, n)), r,
                                   id_base + static_cast<EntityId>(uniform_below(rng, n))});
  }
  return build_graph(std::move(entities), std::move(relations), std::move(attributes),
                     std::move(rel), std::move(att));
}

inline RandomPair random_pair(std::uint64_t seed, const RandomPairSpec& spec = {}) {
  std::mt19937_64 rng(seed);
  RandomPair p;
  p.source = random_graph(rng, spec, 1, 0);
  p.target = random_graph(rng, spec, 2, 1000);
  return p;
}

inline std::vector<EntityId> ids_of(const KnowledgeGraph& g) {
  std::vector<EntityId> out;
  for (const auto& [id, e] : g.entities()) out.push_back(id);
  return out;
}

}  // namespace kgtest
