#include "kgalign/fixture.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "kgalign/candidate_index.hpp"
#include "kgalign/error.hpp"
#include "kgalign/kg_store.hpp"
#include "kgalign/rng.hpp"

namespace kgalign {

namespace {

std::string padded(std::size_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04zu", v);
  return buf;
}

std::string attribute_uri(std::size_t j) {
  return "http://example.org/property/attr" + std::to_string(j);
}

std::string relation_uri(std::size_t j) {
  return "http://example.org/ontology/rel" + std::to_string(j);
}

// Value scheme per attribute: most are near-functional identifiers, every
// third is a low-cardinality category, and every fourth (offset 1) carries a
// second value, so function degrees spread over (0, 1].
void attribute_values(std::size_t j, std::size_t w, std::vector<std::string>& out) {
  out.clear();
  if (j % 3 == 0) {
    out.push_back("category " + std::to_string(w % 4));
  } else {
    out.push_back("value " + std::to_string(j) + "-" + padded(w));
  }
  if (j % 4 == 1) out.push_back("alt " + std::to_string(j) + "-" + padded(w));
}

}  // namespace

FixtureManifest generate_fixture(const FixtureSpec& spec, const std::filesystem::path& out_dir) {
  if (spec.entities < 2 || spec.attributes == 0 || spec.relations == 0 || spec.dim == 0) {
    throw Error(ErrorKind::ConfigError, "fixture needs >= 2 entities and non-empty vocabularies");
  }
  if (spec.noise < 0.0 || spec.noise > 1.0) {
    throw Error(ErrorKind::ConfigError, "noise must lie in [0, 1]");
  }
  const std::size_t n = spec.entities;
  std::mt19937_64 rng(spec.seed);

  // World entity w is source id w and target id kFixtureTargetBase + perm[w].
  std::vector<EntityId> perm(n);
  std::iota(perm.begin(), perm.end(), EntityId{0});
  fisher_yates(std::span<EntityId>(perm), rng);
  const auto target_id = [&](std::size_t w) { return kFixtureTargetBase + perm[w]; };

  std::string ent1, ent2, rel1, rel2, tri1, tri2, att1, att2, gold;
  for (std::size_t w = 0; w < n; ++w) {
    ent1 += std::to_string(w) + "\thttp://de.example.org/resource/Entit%C3%A4t_" + padded(w) + '\n';
    gold += std::to_string(w) + '\t' + std::to_string(target_id(w)) + '\n';
  }
  // Target files list ids ascending, so iterate by target rank.
  std::vector<std::size_t> world_of_rank(n);
  for (std::size_t w = 0; w < n; ++w) world_of_rank[perm[w]] = w;
  for (std::size_t rank = 0; rank < n; ++rank) {
    ent2 += std::to_string(kFixtureTargetBase + rank) + "\thttp://en.example.org/resource/Entity_" +
            padded(world_of_rank[rank]) + '\n';
  }
  for (std::size_t j = 0; j < spec.relations; ++j) {
    rel1 += std::to_string(j) + '\t' + relation_uri(j) + '\n';
    rel2 += std::to_string(j) + '\t' + relation_uri(j) + '\n';
  }

  std::vector<std::string> values;
  for (std::size_t w = 0; w < n; ++w) {
    // Attributes: each held with probability 0.4, at least one.
    std::vector<std::size_t> held;
    for (std::size_t j = 0; j < spec.attributes; ++j) {
      if (uniform01(rng) < 0.4) held.push_back(j);
    }
    if (held.empty()) held.push_back(uniform_below(rng, spec.attributes));
    for (const auto j : held) {
      attribute_values(j, w, values);
      for (const auto& v : values) {
        att1 += "http://de.example.org/resource/Entit%C3%A4t_" + padded(w) + '\t' +
                attribute_uri(j) + '\t' + v + '\n';
        att2 += "http://en.example.org/resource/Entity_" + padded(w) + '\t' + attribute_uri(j) +
                '\t' + v + '\n';
      }
    }
    // Relations: 1-3 outgoing edges to other entities.
    const std::size_t edges = 1 + uniform_below(rng, 3);
    for (std::size_t e = 0; e < edges; ++e) {
      std::size_t other = uniform_below(rng, n - 1);
      if (other >= w) ++other;
      const std::size_t r = uniform_below(rng, spec.relations);
      tri1 += std::to_string(w) + '\t' + std::to_string(r) + '\t' + std::to_string(other) + '\n';
      tri2 += std::to_string(target_id(w)) + '\t' + std::to_string(r) + '\t' +
              std::to_string(target_id(other)) + '\n';
    }
  }

  // Embeddings: one base vector per world entity. Sources copy it (or get an
  // unrelated vector when corrupted); targets add a small jitter.
  std::mt19937_64 emb_rng(mix_seed(spec.seed, 0xe4b));
  const auto component = [&] { return 2.0 * uniform01(emb_rng) - 1.0; };
  std::vector<std::vector<double>> bases(n, std::vector<double>(spec.dim));
  for (auto& b : bases) {
    for (double& x : b) x = component();
  }
  FixtureManifest manifest{spec, 0, 0.0};
  std::vector<double> src_values(n * spec.dim);
  std::vector<double> tgt_values(n * spec.dim);
  std::vector<EntityId> src_ids(n);
  std::vector<EntityId> tgt_ids(n);
  for (std::size_t w = 0; w < n; ++w) {
    src_ids[w] = static_cast<EntityId>(w);
    double* row = src_values.data() + w * spec.dim;
    std::copy(bases[w].begin(), bases[w].end(), row);
    if (uniform01(emb_rng) < spec.noise) {
      ++manifest.corrupted;
      for (std::size_t i = 0; i < spec.dim; ++i) row[i] = component();
    }
  }
  for (std::size_t rank = 0; rank < n; ++rank) {
    const std::size_t w = world_of_rank[rank];
    tgt_ids[rank] = kFixtureTargetBase + static_cast<EntityId>(rank);
    double* row = tgt_values.data() + rank * spec.dim;
    for (std::size_t i = 0; i < spec.dim; ++i) row[i] = bases[w][i] + 0.01 * component();
  }
  const EmbeddingMatrix src(spec.dim, src_ids, src_values);
  const EmbeddingMatrix tgt(spec.dim, tgt_ids, tgt_values);

  std::vector<CandidateSet> sets;
  const std::size_t k = std::min(spec.recall_k, n);
  for (std::size_t w = 0; w < n; ++w) sets.push_back(top_k(static_cast<EntityId>(w), k, src, tgt));
  manifest.recall_at_k = recall_at_k(sets, gold_map(parse_gold_lines(gold))).recall;

  std::filesystem::create_directories(out_dir);
  write_file(out_dir / "ent_ids_1", ent1);
  write_file(out_dir / "ent_ids_2", ent2);
  write_file(out_dir / "rel_ids_1", rel1);
  write_file(out_dir / "rel_ids_2", rel2);
  write_file(out_dir / "triples_1", tri1);
  write_file(out_dir / "triples_2", tri2);
  write_file(out_dir / "att_triples_1", att1);
  write_file(out_dir / "att_triples_2", att2);
  write_file(out_dir / kGoldFile, gold);
  write_file(out_dir / kSourceEmbeddingFile, format_embeddings(src));
  write_file(out_dir / kTargetEmbeddingFile, format_embeddings(tgt));

  nlohmann::ordered_json m;
  m["entities"] = spec.entities;
  m["attributes"] = spec.attributes;
  m["relations"] = spec.relations;
  m["noise"] = spec.noise;
  m["seed"] = spec.seed;
  m["dim"] = spec.dim;
  m["recall_k"] = k;
  m["corrupted_sources"] = manifest.corrupted;
  m["recall_at_k"] = manifest.recall_at_k;
  write_file(out_dir / "manifest.json", m.dump(2) + '\n');
  return manifest;
}

}  // namespace kgalign
