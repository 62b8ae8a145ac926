#include <doctest.h>

#include <random>

#include "kgalign/candidate_index.hpp"
#include "kgalign/error.hpp"
#include "oracles/retrieval_oracle.hpp"

using namespace kgalign;

namespace {

EmbeddingMatrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t dim,
                              EntityId base) {
  std::normal_distribution<double> d;
  std::vector<EntityId> ids;
  std::vector<double> v;
  for (std::size_t r = 0; r < rows; ++r) {
    ids.push_back(base + static_cast<EntityId>(r));
    for (std::size_t j = 0; j < dim; ++j) v.push_back(d(rng));
  }
  return EmbeddingMatrix(dim, std::move(ids), std::move(v));
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::ConfigError;  // sentinel: nothing thrown
}

}  // namespace

TEST_CASE("embedding text format") {
  const auto m = parse_embeddings("2 3\n0 1 0 0\n1 0.5 -2 1e-3\n");
  CHECK(m.dim() == 3);
  CHECK(m.size() == 2);
  CHECK(m.vector(1)[1] == -2.0);
  CHECK(parse_embeddings(format_embeddings(m)).values().size() == 6);
  const auto back = parse_embeddings(format_embeddings(m));
  CHECK(std::equal(back.values().begin(), back.values().end(), m.values().begin()));

  CHECK(kind_of([] { parse_embeddings("2 3\n0 1 0\n1 0 0 0\n"); }) == ErrorKind::ShapeError);
  CHECK(kind_of([] { parse_embeddings("1 2\n0 inf 0\n"); }) == ErrorKind::ValueError);
  CHECK(kind_of([] { parse_embeddings("1 2\n0 nan 0\n"); }) == ErrorKind::ValueError);
  CHECK(kind_of([] { parse_embeddings("3 2\n0 1 0\n"); }) == ErrorKind::ShapeError);
  CHECK(kind_of([] { parse_embeddings("2 2\n0 1 0\n0 1 0\n"); }) == ErrorKind::ShapeError);
  CHECK(kind_of([] { parse_embeddings(""); }) == ErrorKind::ParseError);
  CHECK(kind_of([&] { m.row_index(9); }) == ErrorKind::UnknownEntity);
}

TEST_CASE("top_k small examples") {
  const EmbeddingMatrix src(2, {0}, {1, 0});
  const EmbeddingMatrix tgt(2, {1, 2}, {1, 0, 0, 1});
  const auto one = top_k(0, 1, src, tgt);
  REQUIRE(one.k() == 1);
  CHECK(one.candidates[0] == ScoredTarget{1, 1.0});
  const auto two = top_k(0, 2, src, tgt);
  CHECK(two.candidates == std::vector<ScoredTarget>{{1, 1.0}, {2, 0.0}});

  CHECK(kind_of([&] { top_k(0, 3, src, tgt); }) == ErrorKind::ShapeError);
  CHECK(kind_of([&] { top_k(0, 0, src, tgt); }) == ErrorKind::ShapeError);
  CHECK(kind_of([&] { top_k(5, 1, src, tgt); }) == ErrorKind::UnknownEntity);
}

TEST_CASE("ties break by ascending target id and zero vectors score 0") {
  const EmbeddingMatrix src(2, {0}, {1, 1});
  const EmbeddingMatrix tgt(2, {9, 3, 5, 4}, {2, 2, 1, 1, 0, 0, -1, -1});
  const auto c = top_k(0, 4, src, tgt);
  CHECK(c.target_ids() == std::vector<EntityId>{3, 9, 5, 4});
  CHECK(c.candidates[2].score == 0.0);
}

TEST_CASE("top_k equals full sort on random matrices") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    const auto src = random_matrix(rng, 20, 8, 0);
    const auto tgt = random_matrix(rng, 20, 8, 100);
    for (const std::size_t k : {1u, 5u, 20u}) {
      for (const EntityId s : src.ids()) {
        CHECK(top_k(s, k, src, tgt).candidates == oracle::full_sort_top_k(src, s, tgt, k));
      }
    }
  }
}

TEST_CASE("every ISA retrieves identical candidate sets") {
  std::mt19937_64 rng(5);
  const auto src = random_matrix(rng, 30, 33, 0);
  const auto tgt = random_matrix(rng, 50, 33, 1000);
  const EmbeddingSimilarity scalar(src, tgt, simd::Isa::Scalar);
  for (const simd::Isa isa : {simd::Isa::Avx2, simd::Isa::Neon}) {
    if (!simd::isa_available(isa)) continue;
    const EmbeddingSimilarity other(src, tgt, isa);
    for (const EntityId s : src.ids()) {
      CHECK(top_k(s, 10, scalar) == top_k(s, 10, other));
    }
  }
}

TEST_CASE("ranking is invariant under positive scaling of targets") {
  std::mt19937_64 rng(6);
  const auto src = random_matrix(rng, 15, 16, 0);
  const auto tgt = random_matrix(rng, 40, 16, 1000);
  for (const double factor : {0.5, 4.0, 3.7, 1e-3}) {
    const auto scaled = tgt.scaled(factor);
    for (const EntityId s : src.ids()) {
      CHECK(top_k(s, 10, src, tgt).target_ids() == top_k(s, 10, src, scaled).target_ids());
    }
  }
}

TEST_CASE("recall_at_k") {
  std::vector<CandidateSet> sets;
  for (EntityId s = 0; s < 4; ++s) {
    sets.push_back(CandidateSet{s, {{100 + s, 0.9}, {200, 0.1}}});
  }
  std::map<EntityId, EntityId> gold{{0, 100}, {1, 101}, {2, 102}, {3, 103}};
  CHECK(recall_at_k(sets, gold).recall == 1.0);
  gold[3] = 999;
  CHECK(recall_at_k(sets, gold).recall == 0.75);
  gold.erase(2);
  const auto r = recall_at_k(sets, gold);
  CHECK(r.evaluated == 3);
  CHECK(r.missing_gold == std::vector<EntityId>{2});
  CHECK(kind_of([&] { recall_at_k(std::span<const CandidateSet>{}, gold); }) == ErrorKind::EmptyEval);
}

TEST_CASE("precomputed scores follow the same top-k contract") {
  const auto p = PrecomputedSimilarity::parse("0\t10\t0.5\n0\t11\t0.9\n0\t12\t0.5\n1\t10\t1\n");
  CHECK(p.target_count() == 3);
  CHECK(top_k(0, 3, p).target_ids() == std::vector<EntityId>{11, 10, 12});
  CHECK(top_k(1, 3, p).k() == 1);
  CHECK(kind_of([&] { top_k(2, 1, p); }) == ErrorKind::UnknownEntity);
  CHECK(kind_of([] { PrecomputedSimilarity::parse("0\t1\t0.1\n0\t1\t0.2\n"); }) ==
        ErrorKind::DuplicateId);
}

TEST_CASE("candidate TSV lines") {
  const std::vector<CandidateSet> sets{{7, {{1, 0.5}, {2, 0.25}}}};
  CHECK(format_candidate_lines(sets) == "7\t1\t1\t0.5\n7\t2\t2\t0.25\n");
}
