#include <doctest.h>

#include <algorithm>
#include <random>

#include "kgalign/error.hpp"
#include "kgalign/triple_selector.hpp"
#include "oracles/identifiability_oracle.hpp"
#include "support.hpp"

using namespace kgalign;

namespace {

EntityMap entities(std::initializer_list<EntityId> ids, const char* prefix) {
  EntityMap m;
  for (const EntityId id : ids) {
    const std::string uri = std::string(prefix) + std::to_string(id);
    m.emplace(id, EntityRef{id, uri, "e" + std::to_string(id)});
  }
  return m;
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::ConfigError;
}

}  // namespace

TEST_CASE("function degree examples") {
  // {(e1,a,10),(e2,a,20),(e2,a,21)} -> 2/3
  const auto src = build_graph(entities({1, 2}, "s"), {}, {{0, "a"}}, {},
                               {{1, 0, "10"}, {2, 0, "20"}, {2, 0, "21"}});
  const auto tgt = build_graph(entities({7}, "t"), {}, {}, {}, {});
  const TripleSelector sel(src, tgt);
  CHECK(sel.function_degree_att(Side::Source, 0) == Rational(2, 3));
  CHECK(kind_of([&] { sel.function_degree_att(Side::Source, 5); }) == ErrorKind::AttributeUnknown);

  // One value per entity -> 1, duplicates of the same triple count once.
  const auto one = build_graph(entities({1, 2}, "s"), {}, {{0, "a"}}, {},
                               {{1, 0, "x"}, {2, 0, "y"}, {2, 0, "y"}});
  CHECK(TripleSelector(one, tgt).function_degree_att(Side::Source, 0) == Rational(1, 1));

  // {(e1,r,t1),(e1,r,t2),(e2,r,t1)} -> 2/3
  const auto rel = build_graph(entities({1, 2, 3, 4}, "s"), {{0, "r"}}, {},
                               {{1, 0, 3}, {1, 0, 4}, {2, 0, 3}}, {});
  const TripleSelector rs(rel, tgt);
  CHECK(rs.function_degree_rel(Side::Source, 0) == Rational(2, 3));
  CHECK(kind_of([&] { rs.function_degree_rel(Side::Source, 1); }) == ErrorKind::RelationUnknown);
}

TEST_CASE("function degree spans both KGs, merged by uri") {
  const auto src = build_graph(entities({1}, "s"), {}, {{0, "http://p/a"}}, {}, {{1, 0, "x"}});
  const auto tgt = build_graph(entities({1}, "t"), {}, {{4, "http://p/a"}}, {},
                               {{1, 4, "x"}, {1, 4, "y"}});
  const TripleSelector sel(src, tgt);
  // Heads (s,1),(t,1); pairs (s,1,x),(t,1,x),(t,1,y).
  CHECK(sel.function_degree_att(Side::Source, 0) == Rational(2, 3));
  CHECK(sel.function_degree_att(Side::Target, 4) == Rational(2, 3));
}

TEST_CASE("frequency examples") {
  const auto src = build_graph(entities({0}, "s"), {}, {{0, "a"}}, {}, {{0, 0, "v"}});
  const auto tgt = build_graph(entities({10, 11, 12, 13}, "t"), {}, {{0, "a"}}, {},
                               {{10, 0, "1"}, {10, 0, "2"}, {12, 0, "3"}});
  const TripleSelector sel(src, tgt);
  const std::vector<EntityId> c{10, 11, 12, 13};
  CHECK(sel.frequency_att(Side::Source, 0, c) == Rational(1, 2));
  const std::vector<EntityId> held{10, 12};
  CHECK(sel.frequency_att(Side::Source, 0, held) == Rational(1, 1));
  const std::vector<EntityId> none{11, 13};
  CHECK(sel.frequency_att(Side::Source, 0, none) == Rational(0, 1));
  CHECK(kind_of([&] { sel.frequency_att(Side::Source, 0, std::span<const EntityId>{}); }) ==
        ErrorKind::EmptyCandidates);

  // fun 2/3 (over both KGs: heads s0,t10,t12; pairs 4) is 3/4 here; check the product.
  const auto s = sel.identifiability(TripleKind::Attribute, Side::Source, 0, c);
  CHECK(s.function_degree == Rational(3, 4));
  CHECK(s.identifiability == Rational(3, 8));
  CHECK(sel.identifiability_att(Side::Source, 0, none).is_zero());
  CHECK(sel.identifiability_att(Side::Source, 9, c).is_zero());
}

TEST_CASE("relation frequency counts outgoing triples only") {
  const auto src = build_graph(entities({0, 1}, "s"), {{0, "r"}}, {}, {{0, 0, 1}}, {});
  const auto tgt = build_graph(entities({10, 11}, "t"), {{0, "r"}}, {}, {{10, 0, 11}}, {});
  const TripleSelector sel(src, tgt);
  const std::vector<EntityId> c{10, 11};
  CHECK(sel.frequency_rel(Side::Source, 0, c) == Rational(1, 2));
}

TEST_CASE("select_top_triples ranks subjects and keeps all their triples") {
  // state held by every candidate, area by half, motto by none.
  const UriMap attrs{{0, "http://p/state"}, {1, "http://p/area"}, {2, "http://p/motto"}};
  const auto src = build_graph(entities({0}, "s"), {}, attrs, {},
                               {{0, 2, "m"}, {0, 1, "12"}, {0, 0, "NSW"}, {0, 1, "13"}});
  const auto tgt = build_graph(entities({10, 11}, "t"), {}, attrs, {},
                               {{10, 0, "NSW"}, {11, 0, "VIC"}, {10, 1, "5"}});
  const TripleSelector sel(src, tgt);
  const std::vector<EntityId> c{10, 11};

  const auto top2 = sel.select_top_triples(Side::Source, 0, c, TripleKind::Attribute, 2);
  CHECK(top2.subjects() == std::vector<std::uint32_t>{0, 1});
  REQUIRE(top2.triples.size() == 3);
  CHECK(top2.triples[0].triple_index == 2);
  CHECK(top2.triples[1].triple_index == 1);
  CHECK(top2.triples[2].triple_index == 3);

  const auto all = sel.select_top_triples(Side::Source, 0, c, TripleKind::Attribute, 10);
  CHECK(all.subjects().size() == 3);
  CHECK(sel.select_top_triples(Side::Source, 0, c, TripleKind::Relation, 3).empty());
  CHECK(kind_of([&] { sel.select_top_triples(Side::Source, 0, c, TripleKind::Attribute, 0); }) ==
        ErrorKind::ValueError);
}

TEST_CASE("ties go to the lower subject id") {
  const UriMap attrs{{0, "http://p/a"}, {1, "http://p/b"}};
  const auto src = build_graph(entities({0}, "s"), {}, attrs, {}, {{0, 1, "x"}, {0, 0, "y"}});
  const auto tgt = build_graph(entities({10, 11}, "t"), {}, attrs, {}, {{10, 0, "p"}, {10, 1, "q"}});
  const TripleSelector sel(src, tgt);
  const std::vector<EntityId> c{10, 11};
  const auto top1 = sel.select_top_triples(Side::Source, 0, c, TripleKind::Attribute, 1);
  CHECK(top1.subjects() == std::vector<std::uint32_t>{0});
}

TEST_CASE("scores match the brute-force oracle on random KG pairs") {
  for (std::uint64_t seed = 100; seed < 140; ++seed) {
    CAPTURE(seed);
    const auto pair = kgtest::random_pair(seed);
    const TripleSelector sel(pair.source, pair.target);
    const oracle::KgPair kgs{&pair.source, &pair.target};
    auto cands = kgtest::ids_of(pair.target);
    std::mt19937_64 rng(seed);
    kgalign::fisher_yates(std::span<EntityId>(cands), rng);
    cands.resize(1 + kgalign::uniform_below(rng, cands.size()));

    for (const Side side : {Side::Source, Side::Target}) {
      const KnowledgeGraph& g = sel.graph(side);
      for (const auto& [a, uri] : g.attributes()) {
        const auto f = oracle::fun_att(kgs, uri);
        REQUIRE(f.has_value());
        CHECK(sel.function_degree_att(side, a) == *f);
        CHECK(sel.frequency_att(side, a, cands) == oracle::freq_att(pair.target, uri, cands));
        CHECK(sel.identifiability_att(side, a, cands) == oracle::identy_att(kgs, uri, cands));
      }
      for (const auto& [r, uri] : g.relations()) {
        const auto f = oracle::fun_rel(kgs, uri);
        REQUIRE(f.has_value());
        CHECK(sel.function_degree_rel(side, r) == *f);
        CHECK(sel.frequency_rel(side, r, cands) == oracle::freq_rel(pair.target, uri, cands));
        CHECK(sel.identifiability_rel(side, r, cands) == oracle::identy_rel(kgs, uri, cands));
      }
    }
  }
}

TEST_CASE("selection invariants on random KG pairs") {
  for (std::uint64_t seed = 200; seed < 230; ++seed) {
    CAPTURE(seed);
    const auto pair = kgtest::random_pair(seed);
    const TripleSelector sel(pair.source, pair.target);
    const auto cands = kgtest::ids_of(pair.target);
    for (const auto& [e, ref] : pair.source.entities()) {
      for (const TripleKind kind : {TripleKind::Attribute, TripleKind::Relation}) {
        const auto s = sel.select_top_triples(Side::Source, e, cands, kind, 3);
        const auto subjects = s.subjects();
        CHECK(subjects.size() <= 3);
        // Distinct, ranked by identifiability then id.
        for (std::size_t i = 1; i < subjects.size(); ++i) {
          const auto a = sel.identifiability(kind, Side::Source, subjects[i - 1], cands);
          const auto b = sel.identifiability(kind, Side::Source, subjects[i], cands);
          CHECK((a.identifiability > b.identifiability ||
                 (a.identifiability == b.identifiability && a.subject < b.subject)));
        }
        for (const auto& t : s.triples) {
          CHECK(t.score.identifiability == t.score.function_degree * t.score.frequency);
          CHECK(t.score.identifiability <= Rational(1, 1));
        }
      }
    }
  }
}

TEST_CASE("swapping a non-holder for a holder never lowers frequency") {
  const auto src = build_graph(entities({0}, "s"), {}, {{0, "a"}}, {}, {{0, 0, "v"}});
  const auto tgt = build_graph(entities({10, 11, 12}, "t"), {}, {{0, "a"}}, {}, {{12, 0, "1"}});
  const TripleSelector sel(src, tgt);
  const std::vector<EntityId> before{10, 11};
  const std::vector<EntityId> after{10, 12};
  CHECK(sel.frequency_att(Side::Source, 0, after) >= sel.frequency_att(Side::Source, 0, before));
}

TEST_CASE("score dump lists every subject of the entity") {
  const auto src = build_graph(entities({0}, "s"), {}, {{0, "http://p/a"}}, {}, {{0, 0, "v"}});
  const auto tgt = build_graph(entities({10}, "t"), {}, {{0, "http://p/a"}}, {}, {{10, 0, "v"}});
  const TripleSelector sel(src, tgt);
  const std::vector<EntityId> c{10};
  CHECK(sel.format_score_dump(Side::Source, 0, c, TripleKind::Attribute) ==
        "0\tattribute\thttp://p/a\t1/1\t1/1\t1/1\n");
}
