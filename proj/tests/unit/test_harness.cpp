#include <doctest.h>

#include <sstream>

#include <json.hpp>

#include "kgalign/error.hpp"
#include "kgalign/harness.hpp"
#include "support.hpp"

using namespace kgalign;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run(std::vector<std::string> args) {
  args.insert(args.begin(), "kgalign");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

struct Fixture {
  kgtest::TempDir dir{"cli"};
  std::string data;
  std::string out;
  explicit Fixture(std::size_t entities = 20) {
    data = (dir / "data").string();
    out = (dir / "out").string();
    const auto r = run({"gen-fixture", "--out", data, "--entities", std::to_string(entities),
                        "--seed", "5"});
    REQUIRE(r.code == 0);
  }
};

std::string read_all(const std::filesystem::path& dir) {
  std::string all;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    all += entry.path().filename().string() + "\n" + read_file(entry.path());
  }
  return all;
}

}  // namespace

TEST_CASE("config text") {
  RunConfig c;
  apply_config_text(c, "# comment\nk = 7\nvotes=3 # trailing\nfallback = none\norder = reversed\n"
                       "sizes = 10, 20\nseed = 9\nprompt_kind = knowledge\nidentity_first = false\n");
  CHECK(c.pipeline.k_candidates == 7);
  CHECK(c.pipeline.vote.rounds == 3);
  CHECK(c.pipeline.fallback == FallbackPolicy::None);
  CHECK(c.pipeline.order == CandidateOrder::Reversed);
  CHECK(c.sizes == std::vector<std::size_t>{10, 20});
  CHECK(c.pipeline.vote.seed == 9);
  CHECK(c.pipeline.only_kind == PromptKind::KnowledgeDriven);
  CHECK_FALSE(c.pipeline.vote.identity_first);

  for (const char* bad : {"nonsense", "k = x", "unknown = 1", "api_key = abc", "order = up"}) {
    try {
      apply_config_text(c, bad);
      FAIL("accepted " << bad);
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::ConfigError);
    }
  }
  try {
    apply_config_text(c, "k = 1\n\nbogus\n");
  } catch (const Error& e) {
    CHECK(e.line() == 3u);
  }
}

TEST_CASE("oracle spellings") {
  RunConfig c;
  const std::map<EntityId, EntityId> gold;
  CHECK(std::holds_alternative<TruthfulOracle>(parse_oracle("truthful", c, gold).policy));
  CHECK(std::holds_alternative<FirstOptionOracle>(parse_oracle("first", c, gold).policy));
  CHECK(std::get<FixedAnswerOracle>(parse_oracle("fixed:B", c, gold).policy).text == "B");
  CHECK(std::holds_alternative<PositionBiasedOracle>(parse_oracle("biased", c, gold).policy));
  CHECK_THROWS_AS(parse_oracle("psychic", c, gold), Error);
}

TEST_CASE("exit codes") {
  CHECK(exit_code_for(ErrorKind::ConfigError) == 2);
  CHECK(exit_code_for(ErrorKind::IoError) == 2);
  CHECK(exit_code_for(ErrorKind::DanglingReference) == 3);
  CHECK(exit_code_for(ErrorKind::ParseError) == 3);
  CHECK(exit_code_for(ErrorKind::TransportError) == 4);
  CHECK(exit_code_for(ErrorKind::RunAborted) == 4);
}

TEST_CASE("gen-fixture is byte-identical per seed and records recall") {
  kgtest::TempDir dir("gen");
  const auto a = (dir / "a").string(), b = (dir / "b").string(), c = (dir / "c").string();
  REQUIRE(run({"gen-fixture", "--out", a, "--entities", "50", "--seed", "3"}).code == 0);
  REQUIRE(run({"gen-fixture", "--out", b, "--entities", "50", "--seed", "3"}).code == 0);
  CHECK(read_all(a) == read_all(b));
  const auto manifest = nlohmann::json::parse(read_file(dir / "a" / "manifest.json"));
  CHECK(manifest["recall_at_k"] == 1.0);

  const auto noisy = run({"gen-fixture", "--out", c, "--entities", "50", "--noise", "0.5"});
  REQUIRE(noisy.code == 0);
  const auto m = nlohmann::json::parse(read_file(dir / "c" / "manifest.json"));
  CHECK(m["recall_at_k"].get<double>() < 1.0);
  // Each source is corrupted independently with probability `noise`.
  const auto corrupted = m["corrupted_sources"].get<std::size_t>();
  CHECK(corrupted > 10);
  CHECK(corrupted < 40);
  CHECK(noisy.out.find("corrupted sources: " + std::to_string(corrupted)) != std::string::npos);
}

TEST_CASE("ingest prints stats and reuses its snapshot") {
  Fixture f;
  const auto first = run({"ingest", "--data", f.data, "--out", f.out});
  CHECK(first.code == 0);
  CHECK(first.out.find("source\t20\t") != std::string::npos);
  CHECK(first.out.find("snapshot written") != std::string::npos);
  const auto second = run({"ingest", "--data", f.data, "--out", f.out});
  CHECK(second.out.find("snapshot reused") != std::string::npos);

  const auto missing = run({"ingest", "--data", (f.dir / "nowhere").string(), "--out", f.out});
  CHECK(missing.code == 2);
  CHECK(missing.err.find("nowhere") != std::string::npos);
}

TEST_CASE("integrity problems exit with 3") {
  Fixture f;
  write_file(std::filesystem::path(f.data) / "triples_1", "0\t0\t999999\n");
  CHECK(run({"ingest", "--data", f.data, "--out", f.out}).code == 3);
}

TEST_CASE("candidates writes TSV and recall") {
  Fixture f;
  const auto r = run({"candidates", "--data", f.data, "--out", f.out, "--k", "10"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("recall@10: 1.0000") != std::string::npos);
  const auto tsv = read_file(std::filesystem::path(f.out) / "candidates.tsv");
  CHECK(std::count(tsv.begin(), tsv.end(), '\n') == 200);
  CHECK(run({"candidates", "--data", f.data, "--out", f.out, "--k", "21"}).code == 2);
}

TEST_CASE("align with the truthful oracle") {
  Fixture f;
  const auto r = run({"align", "--data", f.data, "--out", f.out, "--oracle", "truthful"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("Hits@1: 1.0000") != std::string::npos);
  const auto jsonl = read_file(std::filesystem::path(f.out) / "decisions.jsonl");
  CHECK(std::count(jsonl.begin(), jsonl.end(), '\n') == 20);
  CHECK(std::filesystem::exists(std::filesystem::path(f.out) / "audit.jsonl"));

  CHECK(run({"align", "--data", f.data, "--out", f.out}).code == 2);  // no backend
  CHECK(run({"align", "--data", f.data, "--out", f.out, "--oracle", "truthful", "--order",
             "upside-down"}).code == 2);
}

TEST_CASE("fallback none never beats top-similarity") {
  Fixture f;
  const auto hits = [&](const char* fallback) {
    const auto r = run({"align", "--data", f.data, "--out", f.out, "--oracle", "biased",
                        "--fallback", fallback, "--seed", "2"});
    REQUIRE(r.code == 0);
    const auto pos = r.out.find("Hits@1: ");
    return std::stod(r.out.substr(pos + 8, 6));
  };
  CHECK(hits("top-similarity") >= hits("none"));
}

TEST_CASE("dry run prints prompts without calling a backend") {
  Fixture f;
  const auto r = run({"align", "--data", f.data, "--out", f.out, "--dry-run", "--endpoint",
                      "http://127.0.0.1:9/v1/chat/completions"});
  REQUIRE(r.code == 0);
  std::size_t prompts = 0;
  for (std::size_t p = r.out.find("--- source"); p != std::string::npos;
       p = r.out.find("--- source", p + 1)) {
    ++prompts;
  }
  CHECK(prompts == 3);
  CHECK(r.out.find("Candidate entities:") != std::string::npos);
  CHECK_FALSE(std::filesystem::exists(std::filesystem::path(f.out) / "decisions.jsonl"));
}

TEST_CASE("experiment tables") {
  Fixture f(40);
  const auto order = run({"exp-order", "--data", f.data, "--out", f.out});
  REQUIRE(order.code == 0);
  CHECK(order.out.find("similarity\t") != std::string::npos);
  CHECK(order.out.find("random\t") != std::string::npos);
  CHECK(order.out.find("reversed\t") != std::string::npos);
  CHECK(std::filesystem::exists(std::filesystem::path(f.out) / "exp_order.tsv"));

  const auto size = run({"exp-size", "--data", f.data, "--out", f.out, "--sizes", "10,20,30"});
  REQUIRE(size.code == 0);
  CHECK(std::count(size.out.begin(), size.out.end(), '\n') == 4);
  CHECK(run({"exp-size", "--data", f.data, "--out", f.out, "--sizes", "10,41"}).code == 2);
  CHECK(run({"exp-order", "--data", f.data, "--out", f.out, "--orders", "similarity,odd"}).code ==
        2);
  CHECK(run({"exp-order", "--data", f.data, "--out", f.out, "--endpoint",
             "http://127.0.0.1:9/v1/chat/completions"}).code == 2);
}

TEST_CASE("unreachable endpoint aborts with exit 4") {
  Fixture f(3);
  std::string cfg = (f.dir / "run.conf").string();
  write_file(cfg, "retries = 0\ntimeout_ms = 200\nk = 3\n");
  // Nothing listens on port 1.
  const auto r = run({"align", "--data", f.data, "--out", f.out, "--config", cfg, "--endpoint",
                      "http://127.0.0.1:1/v1/chat/completions"});
  CHECK(r.code == 4);
}

TEST_CASE("usage errors") {
  CHECK(run({}).code == 2);
  CHECK(run({"teleport"}).code == 2);
  CHECK(run({"align", "--votes", "many"}).code == 2);
  CHECK(run({"--help"}).code == 0);
}
