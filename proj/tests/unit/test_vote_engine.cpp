#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <numeric>
#include <set>

#include "kgalign/error.hpp"
#include "kgalign/vote_engine.hpp"
#include "oracles/tally_oracle.hpp"

using namespace kgalign;

namespace {

struct MiniKg {
  KnowledgeGraph source;
  KnowledgeGraph target;
  std::vector<EntityId> candidates;
  MiniKg(std::size_t m = 10) {
    EntityMap s{{0, {0, "s0", "source"}}};
    EntityMap t;
    for (std::size_t i = 0; i < m; ++i) {
      const auto id = static_cast<EntityId>(100 + i);
      t.emplace(id, EntityRef{id, "t" + std::to_string(i), "target " + std::to_string(i)});
      candidates.push_back(id);
    }
    source = build_graph(s, {}, {}, {}, {});
    target = build_graph(t, {}, {}, {}, {});
  }
  PromptInputs inputs() const { return PromptInputs{&source, &target}; }
};

Gateway oracle_gateway(OracleScript script) {
  return Gateway(std::make_shared<OracleBackend>(std::move(script)), GatewayConfig{});
}

class FailingBackend final : public CompletionBackend {
 public:
  explicit FailingBackend(std::size_t fail_first) : fail_first_(fail_first) {}
  std::string complete(const CompletionRequest& r) override {
    if (r.tag.round < fail_first_) throw Error(ErrorKind::TransportError, "down");
    return "A";
  }

 private:
  std::size_t fail_first_;
};

}  // namespace

TEST_CASE("permutation sampling examples") {
  const auto all3 = sample_permutations(3, 6, 1);
  CHECK(all3.permutations.size() == 6);
  CHECK_FALSE(all3.capped);
  CHECK(std::is_sorted(all3.permutations.begin(), all3.permutations.end()));

  const auto one = sample_permutations(1, 1, 1);
  CHECK(one.permutations == std::vector<Permutation>{{0}});

  const auto capped = sample_permutations(2, 5, 1);
  CHECK(capped.permutations.size() == 2);
  CHECK(capped.capped);

  CHECK_THROWS_AS(sample_permutations(0, 3, 1), Error);
  CHECK_THROWS_AS(sample_permutations(3, 0, 1), Error);
}

TEST_CASE("sampled permutations are distinct, valid and seeded") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    for (const bool identity_first : {true, false}) {
      const auto s = sample_permutations(10, 5, seed, identity_first);
      REQUIRE(s.permutations.size() == 5);
      std::set<Permutation> distinct(s.permutations.begin(), s.permutations.end());
      CHECK(distinct.size() == 5);
      for (auto p : s.permutations) {
        std::sort(p.begin(), p.end());
        Permutation id(10);
        std::iota(id.begin(), id.end(), std::size_t{0});
        CHECK(p == id);
      }
      if (identity_first) CHECK(std::is_sorted(s.permutations[0].begin(), s.permutations[0].end()));
      CHECK(sample_permutations(10, 5, seed, identity_first).permutations == s.permutations);
    }
  }
  CHECK(sample_permutations(10, 5, 1, false).permutations !=
        sample_permutations(10, 5, 2, false).permutations);
}

TEST_CASE("tally examples") {
  using C = std::vector<std::optional<EntityId>>;
  const C a{2, 2, 7, 2, 9};
  const auto r = tally(a, 5);
  CHECK(r.decision == Decision{Winner{2}});
  CHECK(r.counts.at(2) == 3);

  CHECK(tally(C{1, 2, 3, 4, 5}, 5).decision == Decision{NoConsensus{}});
  CHECK(tally(C{1, 1, 2, 2}, 4).decision == Decision{NoConsensus{}});
  CHECK(tally(C{1, 1, std::nullopt, std::nullopt, std::nullopt}, 5).decision ==
        Decision{Winner{1}});
  CHECK(tally(C{std::nullopt}, 1).decision == Decision{NoConsensus{}});
  CHECK(tally(C{}, 3).decision == Decision{NoConsensus{}});
  CHECK(tally(C{4}, 1).decision == Decision{Winner{4}});
  CHECK_THROWS_AS(tally(C{1, 1, 1}, 2), Error);
}

TEST_CASE("tally agrees with the brute-force rule on small exhaustive inputs") {
  for (std::size_t n = 1; n <= 4; ++n) {
    for (std::size_t len = 0; len <= n; ++len) {
      std::vector<std::size_t> digits(len, 0);  // 0 = abstain, 1..3 = target
      while (true) {
        std::vector<std::optional<EntityId>> choices;
        for (const auto d : digits) {
          choices.push_back(d == 0 ? std::nullopt : std::optional<EntityId>(d));
        }
        const auto got = tally(choices, n);
        const auto want = oracle::tally_winner(choices, n);
        const auto* w = std::get_if<Winner>(&got.decision);
        CHECK((w ? std::optional<EntityId>(w->target) : std::nullopt) == want);
        std::size_t i = 0;
        while (i < len && ++digits[i] == 4) digits[i++] = 0;
        if (i == len) break;
      }
    }
  }
}

TEST_CASE("truthful oracle wins every round wherever the gold lands") {
  const MiniKg kg;
  for (const EntityId gold : kg.candidates) {
    auto gw = oracle_gateway(OracleScript{TruthfulOracle{{{0, gold}}}});
    VoteConfig cfg;
    cfg.seed = gold;
    const auto v = run_vote(0, kg.candidates, PromptKind::KnowledgeDriven, cfg, kg.inputs(), gw);
    CHECK(v.winner() == gold);
    CHECK(v.tally.at(gold) == 5);
    for (const auto& r : v.per_round) CHECK(r.target == gold);
  }
}

TEST_CASE("first-option oracle under distinct first elements gives no consensus") {
  const MiniKg kg;
  auto gw = oracle_gateway(OracleScript{FirstOptionOracle{}});
  std::size_t checked = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    VoteConfig cfg;
    cfg.seed = seed;
    cfg.identity_first = false;
    const auto perms = sample_permutations(10, 5, seed, false).permutations;
    std::set<std::size_t> firsts;
    for (const auto& p : perms) firsts.insert(p[0]);
    if (firsts.size() < 3) continue;
    ++checked;
    const auto v = run_vote(0, kg.candidates, PromptKind::KnowledgeDriven, cfg, kg.inputs(), gw);
    // At least three distinct firsts out of five: the max count is at most 3,
    // and a winner needs a unique max of 2 or more.
    std::map<EntityId, std::size_t> expect;
    for (const auto& p : perms) ++expect[kg.candidates[p[0]]];
    CHECK(v.tally == expect);
    if (firsts.size() == 5) CHECK_FALSE(v.winner().has_value());
  }
  CHECK(checked > 30);
}

TEST_CASE("garbage replies abstain") {
  const MiniKg kg;
  auto gw = oracle_gateway(OracleScript{FixedAnswerOracle{"I cannot determine."}});
  const auto v = run_vote(0, kg.candidates, PromptKind::KnowledgeDriven, VoteConfig{}, kg.inputs(), gw);
  CHECK(v.tally.empty());
  CHECK_FALSE(v.winner().has_value());
  for (const auto& r : v.per_round) CHECK_FALSE(r.choice.chosen());
}

TEST_CASE("transport failures abstain until they are the majority") {
  const MiniKg kg;
  {
    Gateway gw(std::make_shared<FailingBackend>(2), GatewayConfig{});
    const auto v =
        run_vote(0, kg.candidates, PromptKind::KnowledgeDriven, VoteConfig{}, kg.inputs(), gw);
    CHECK(std::count_if(v.per_round.begin(), v.per_round.end(),
                        [](const VoteRound& r) { return r.failed; }) == 2);
  }
  {
    Gateway gw(std::make_shared<FailingBackend>(3), GatewayConfig{});
    try {
      run_vote(0, kg.candidates, PromptKind::KnowledgeDriven, VoteConfig{}, kg.inputs(), gw);
      FAIL("expected RunAborted");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::RunAborted);
    }
  }
}

TEST_CASE("votes are deterministic") {
  const MiniKg kg;
  auto gw = oracle_gateway(OracleScript{PositionBiasedOracle{{3, 1}, 2, 9, {{0, 104}}}});
  VoteConfig cfg;
  cfg.seed = 77;
  const auto a = run_vote(0, kg.candidates, PromptKind::KnowledgeDriven, cfg, kg.inputs(), gw);
  const auto b = run_vote(0, kg.candidates, PromptKind::KnowledgeDriven, cfg, kg.inputs(), gw);
  REQUIRE(a.per_round.size() == b.per_round.size());
  for (std::size_t i = 0; i < a.per_round.size(); ++i) {
    CHECK(a.per_round[i].permutation == b.per_round[i].permutation);
    CHECK(a.per_round[i].target == b.per_round[i].target);
  }
  CHECK(a.tally == b.tally);
  CHECK(a.decision == b.decision);
}
