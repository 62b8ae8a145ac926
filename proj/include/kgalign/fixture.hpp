#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>

namespace kgalign {

/// Parameters of a synthetic aligned KG pair.
struct FixtureSpec {
  std::size_t entities = 50;
  std::size_t attributes = 12;  // attribute vocabulary size
  std::size_t relations = 8;    // relation vocabulary size
  /// Share of source entities whose embedding is replaced by an unrelated
  /// vector, which pushes their gold target out of reach of retrieval.
  double noise = 0.0;
  std::uint64_t seed = 1;
  std::size_t dim = 16;
  std::size_t recall_k = 10;
};

struct FixtureManifest {
  FixtureSpec spec;
  std::size_t corrupted = 0;
  double recall_at_k = 0.0;  // measured after generation
};

/// Writes a DBP15K-layout directory: ent_ids_{1,2}, rel_ids_{1,2},
/// triples_{1,2}, att_triples_{1,2}, ref_ent_ids, emb_{1,2}.txt and
/// manifest.json. Byte-identical for a fixed spec.
FixtureManifest generate_fixture(const FixtureSpec& spec, const std::filesystem::path& out_dir);

inline constexpr const char* kSourceEmbeddingFile = "emb_1.txt";
inline constexpr const char* kTargetEmbeddingFile = "emb_2.txt";
inline constexpr const char* kGoldFile = "ref_ent_ids";

/// Target ids start here so the two sides never share an id.
inline constexpr std::uint32_t kFixtureTargetBase = 100000;

}  // namespace kgalign
