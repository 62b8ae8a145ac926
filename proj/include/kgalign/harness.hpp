#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kgalign/align_pipeline.hpp"
#include "kgalign/candidate_index.hpp"
#include "kgalign/error.hpp"
#include "kgalign/fixture.hpp"
#include "kgalign/kg_store.hpp"
#include "kgalign/llm_gateway.hpp"
#include "kgalign/triple_selector.hpp"

namespace kgalign {

/// Everything one CLI invocation needs. Defaults, then the config file, then
/// environment variables, then command-line flags.
struct RunConfig {
  std::filesystem::path data_dir;
  std::optional<GraphFiles> source_files;  // default: dbp15k_files(data_dir, 1)
  std::optional<GraphFiles> target_files;  // default: dbp15k_files(data_dir, 2)
  std::filesystem::path gold;              // default: data_dir/ref_ent_ids
  std::filesystem::path source_embeddings; // default: data_dir/emb_1.txt
  std::filesystem::path target_embeddings; // default: data_dir/emb_2.txt
  std::optional<std::filesystem::path> scores;  // precomputed similarity TSV

  PipelineConfig pipeline;
  HttpConfig http;
  GatewayConfig gateway;
  std::optional<std::filesystem::path> template_path;

  /// "", "truthful", "first", "fixed:TEXT" or "biased".
  std::string oracle;
  std::vector<double> biased_weights{3.0, 1.0};
  double biased_truth_weight = 4.0;

  std::vector<CandidateOrder> orders{CandidateOrder::Similarity, CandidateOrder::Random,
                                     CandidateOrder::Reversed};
  std::vector<std::size_t> sizes{10, 20, 30, 40, 50};

  std::filesystem::path out_dir = "out";
  std::uint64_t seed = 0;
  std::optional<std::size_t> limit;   // first N gold sources
  std::optional<std::size_t> sample;  // seeded random N gold sources
  bool allow_remote = false;
  bool dry_run = false;

  FixtureSpec fixture;

  GraphFiles source_graph_files() const;
  GraphFiles target_graph_files() const;
  /// Applies `seed` to the vote, order and oracle seeds.
  void set_seed(std::uint64_t s);
};

/// `key = value` lines, `#` comments. Throws ConfigError on unknown keys or
/// bad values, IoError when the file is missing.
void apply_config_text(RunConfig& config, std::string_view contents);
void apply_config_file(RunConfig& config, const std::filesystem::path& path);
/// KGALIGN_API_KEY, KGALIGN_ENDPOINT, KGALIGN_MODEL.
void apply_environment(RunConfig& config);

/// Scripted oracle from its CLI spelling. Throws ConfigError.
OracleScript parse_oracle(std::string_view spec, const RunConfig& config,
                          const std::map<EntityId, EntityId>& gold);

/// Graphs, embeddings, gold and the derived indexes, loaded once per command.
struct Workspace {
  LoadedGraph source;
  LoadedGraph target;
  GoldAlignment gold;
  std::map<EntityId, EntityId> gold_by_source;
  std::optional<EmbeddingMatrix> source_embeddings;
  std::optional<EmbeddingMatrix> target_embeddings;
  std::unique_ptr<SimilarityProvider> similarity;
  std::unique_ptr<TripleSelector> selector;

  static std::unique_ptr<Workspace> load(const RunConfig& config);
  std::vector<EntityId> evaluation_sources(const RunConfig& config) const;
};

/// For experiment commands, an unset oracle means the scripted "biased"
/// oracle, and an endpoint needs allow_remote.
std::unique_ptr<Gateway> make_gateway(const RunConfig& config, const Workspace& ws,
                                      bool experiment);

int exit_code_for(ErrorKind kind);

int cmd_ingest(const RunConfig& config, std::ostream& out);
int cmd_candidates(const RunConfig& config, std::ostream& out);
int cmd_align(const RunConfig& config, std::ostream& out);
int cmd_experiment_order(const RunConfig& config, std::ostream& out);
int cmd_experiment_size(const RunConfig& config, std::ostream& out);
int cmd_gen_fixture(const RunConfig& config, std::ostream& out);

/// Full CLI entry point; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace kgalign
