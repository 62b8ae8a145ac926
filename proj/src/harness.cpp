#include "kgalign/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <ostream>
#include <random>

#include "kgalign/rng.hpp"
#include "kgalign/snapshot.hpp"
#include "kgalign/text.hpp"

namespace kgalign {

namespace {

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

template <typename T>
T parse_value(std::string_view key, std::string_view value) {
  value = text::trim(value);
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw Error(ErrorKind::ConfigError,
                "bad value '" + std::string(value) + "' for " + std::string(key));
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  value = text::trim(value);
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw Error(ErrorKind::ConfigError, "bad boolean '" + std::string(value) + "' for " +
                                          std::string(key));
}

template <typename T>
std::vector<T> parse_list(std::string_view key, std::string_view value) {
  std::vector<T> out;
  for (const auto item : text::split(value, ',')) {
    if (text::trim(item).empty()) continue;
    out.push_back(parse_value<T>(key, item));
  }
  if (out.empty()) throw Error(ErrorKind::ConfigError, "empty list for " + std::string(key));
  return out;
}

std::vector<CandidateOrder> parse_orders(std::string_view value) {
  std::vector<CandidateOrder> out;
  for (const auto item : text::split(value, ',')) {
    const auto t = text::trim(item);
    if (!t.empty()) out.push_back(candidate_order_from_string(t));
  }
  if (out.empty()) throw Error(ErrorKind::ConfigError, "empty order list");
  return out;
}

void require_file(const std::filesystem::path& p, const char* what) {
  if (p.empty() || !std::filesystem::exists(p)) {
    throw Error(ErrorKind::IoError, std::string(what) + " not found: " + p.string());
  }
}

void require_graph_files(const GraphFiles& f) {
  require_file(f.entities, "entity file");
  require_file(f.rel_triples, "relation triple file");
  require_file(f.att_triples, "attribute triple file");
}

LoadedGraph load_with_snapshot(const GraphFiles& files, const std::filesystem::path& snapshot,
                               bool& reused) {
  require_graph_files(files);
  const auto stamps = stamp_files(files);
  if (auto cached = read_snapshot(snapshot, stamps)) {
    reused = true;
    return std::move(*cached);
  }
  reused = false;
  LoadedGraph loaded = load_graph(files);
  write_snapshot(snapshot, loaded, stamps);
  return loaded;
}

std::string stats_row(std::string_view side, const GraphStats& s) {
  return std::string(side) + '\t' + std::to_string(s.entity_count) + '\t' +
         std::to_string(s.relation_count) + '\t' + std::to_string(s.attribute_count) + '\t' +
         std::to_string(s.rel_triple_count) + '\t' + std::to_string(s.att_triple_count);
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

GraphFiles RunConfig::source_graph_files() const {
  return source_files ? *source_files : dbp15k_files(data_dir, 1);
}

GraphFiles RunConfig::target_graph_files() const {
  return target_files ? *target_files : dbp15k_files(data_dir, 2);
}

void RunConfig::set_seed(std::uint64_t s) {
  seed = s;
  pipeline.vote.seed = s;
  pipeline.order_seed = s;
}

void apply_config_text(RunConfig& c, std::string_view contents) {
  std::size_t line_no = 0;
  for (const auto raw : text::split(contents, '\n')) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = text::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorKind::ConfigError, "expected 'key = value'", line_no);
    }
    const std::string key(text::trim(line.substr(0, eq)));
    const std::string value(text::trim(line.substr(eq + 1)));

    if (key == "data_dir") c.data_dir = value;
    else if (key == "gold") c.gold = value;
    else if (key == "source_embeddings") c.source_embeddings = value;
    else if (key == "target_embeddings") c.target_embeddings = value;
    else if (key == "scores") c.scores = value;
    else if (key == "out") c.out_dir = value;
    else if (key == "seed") c.set_seed(parse_value<std::uint64_t>(key, value));
    else if (key == "k") c.pipeline.k_candidates = parse_value<std::size_t>(key, value);
    else if (key == "k_attributes") c.pipeline.k_attributes = parse_value<std::size_t>(key, value);
    else if (key == "k_relations") c.pipeline.k_relations = parse_value<std::size_t>(key, value);
    else if (key == "votes") c.pipeline.vote.rounds = parse_value<std::size_t>(key, value);
    else if (key == "identity_first") c.pipeline.vote.identity_first = parse_bool(key, value);
    else if (key == "fallback") c.pipeline.fallback = fallback_from_string(value);
    else if (key == "order") c.pipeline.order = candidate_order_from_string(value);
    else if (key == "orders") c.orders = parse_orders(value);
    else if (key == "sizes") c.sizes = parse_list<std::size_t>(key, value);
    else if (key == "prompt_kind") c.pipeline.only_kind = prompt_kind_from_string(value);
    else if (key == "parallelism") c.pipeline.parallelism = parse_value<std::size_t>(key, value);
    else if (key == "template") c.template_path = value;
    else if (key == "endpoint") c.http.endpoint = value;
    else if (key == "model") c.gateway.model_name = value;
    else if (key == "timeout_ms") c.http.timeout = std::chrono::milliseconds(parse_value<long>(key, value));
    else if (key == "retries") c.http.max_retries = parse_value<int>(key, value);
    else if (key == "backoff_ms") c.http.backoff_base = std::chrono::milliseconds(parse_value<long>(key, value));
    else if (key == "max_in_flight") c.gateway.max_in_flight = parse_value<std::size_t>(key, value);
    else if (key == "requests_per_second") c.gateway.requests_per_second = parse_value<double>(key, value);
    else if (key == "max_tokens") c.gateway.max_tokens = parse_value<int>(key, value);
    else if (key == "audit") c.gateway.audit_path = value;
    else if (key == "oracle") c.oracle = value;
    else if (key == "biased_weights") c.biased_weights = parse_list<double>(key, value);
    else if (key == "biased_truth_weight") c.biased_truth_weight = parse_value<double>(key, value);
    else if (key == "limit") c.limit = parse_value<std::size_t>(key, value);
    else if (key == "sample") c.sample = parse_value<std::size_t>(key, value);
    else if (key == "api_key") {
      throw Error(ErrorKind::ConfigError, "api_key is read from KGALIGN_API_KEY only", line_no);
    } else {
      throw Error(ErrorKind::ConfigError, "unknown key '" + key + "'", line_no);
    }
  }
}

void apply_config_file(RunConfig& config, const std::filesystem::path& path) {
  require_file(path, "config file");
  apply_config_text(config, read_file(path));
}

void apply_environment(RunConfig& config) {
  if (const char* key = std::getenv("KGALIGN_API_KEY")) config.http.api_key = key;
  if (const char* ep = std::getenv("KGALIGN_ENDPOINT")) config.http.endpoint = ep;
  if (const char* model = std::getenv("KGALIGN_MODEL")) config.gateway.model_name = model;
}

OracleScript parse_oracle(std::string_view spec, const RunConfig& config,
                          const std::map<EntityId, EntityId>& gold) {
  if (spec == "truthful") return OracleScript{TruthfulOracle{gold}};
  if (spec == "first") return OracleScript{FirstOptionOracle{}};
  if (spec.starts_with("fixed:")) return OracleScript{FixedAnswerOracle{std::string(spec.substr(6))}};
  if (spec == "biased") {
    return OracleScript{
        PositionBiasedOracle{config.biased_weights, config.biased_truth_weight, config.seed, gold}};
  }
  throw Error(ErrorKind::ConfigError, "unknown oracle '" + std::string(spec) + "'");
}

// ---------------------------------------------------------------------------
// Workspace

std::unique_ptr<Workspace> Workspace::load(const RunConfig& config) {
  auto ws = std::make_unique<Workspace>();
  bool reused = false;
  ws->source = load_with_snapshot(config.source_graph_files(),
                                  config.out_dir / "snapshot" / "source.kgs", reused);
  ws->target = load_with_snapshot(config.target_graph_files(),
                                  config.out_dir / "snapshot" / "target.kgs", reused);
  const auto gold_path = config.gold.empty() ? config.data_dir / kGoldFile : config.gold;
  require_file(gold_path, "gold alignment");
  ws->gold = parse_gold_file(gold_path);
  ws->gold_by_source = gold_map(ws->gold);

  if (config.scores) {
    require_file(*config.scores, "score file");
    ws->similarity = std::make_unique<PrecomputedSimilarity>(PrecomputedSimilarity::load(*config.scores));
  } else {
    const auto src = config.source_embeddings.empty() ? config.data_dir / kSourceEmbeddingFile
                                                      : config.source_embeddings;
    const auto tgt = config.target_embeddings.empty() ? config.data_dir / kTargetEmbeddingFile
                                                      : config.target_embeddings;
    require_file(src, "source embeddings");
    require_file(tgt, "target embeddings");
    ws->source_embeddings = load_embeddings(src);
    ws->target_embeddings = load_embeddings(tgt);
    ws->similarity =
        std::make_unique<EmbeddingSimilarity>(*ws->source_embeddings, *ws->target_embeddings);
  }
  ws->selector = std::make_unique<TripleSelector>(ws->source.graph, ws->target.graph);
  return ws;
}

std::vector<EntityId> Workspace::evaluation_sources(const RunConfig& config) const {
  std::vector<EntityId> sources;
  for (const auto& [s, t] : gold) sources.push_back(s);
  if (config.sample && *config.sample < sources.size()) {
    std::mt19937_64 rng(mix_seed(config.seed, 0x5a3b1e));
    fisher_yates(std::span<EntityId>(sources), rng);
    sources.resize(*config.sample);
  }
  if (config.limit && *config.limit < sources.size()) sources.resize(*config.limit);
  return sources;
}

std::unique_ptr<Gateway> make_gateway(const RunConfig& config, const Workspace& ws,
                                      bool experiment) {
  std::string oracle = config.oracle;
  std::shared_ptr<CompletionBackend> backend;
  if (oracle.empty() && !config.http.endpoint.empty()) {
    if (experiment && !config.allow_remote) {
      throw Error(ErrorKind::ConfigError,
                  "refusing to run an experiment against " + config.http.endpoint +
                      " without --allow-remote");
    }
    backend = std::make_shared<HttpChatBackend>(config.http);
  } else {
    if (oracle.empty()) {
      if (!experiment) {
        throw Error(ErrorKind::ConfigError, "no endpoint or --oracle configured");
      }
      oracle = "biased";
    }
    backend = std::make_shared<OracleBackend>(parse_oracle(oracle, config, ws.gold_by_source));
  }
  GatewayConfig gc = config.gateway;
  if (!gc.audit_path) gc.audit_path = config.out_dir / "audit.jsonl";
  return std::make_unique<Gateway>(std::move(backend), std::move(gc));
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ConfigError:
    case ErrorKind::IoError:
      return 2;
    case ErrorKind::TransportError:
    case ErrorKind::ApiError:
    case ErrorKind::RunAborted:
      return 4;
    default:
      return 3;
  }
}

// ---------------------------------------------------------------------------
// Commands

int cmd_ingest(const RunConfig& config, std::ostream& out) {
  out << "side\tentities\trelations\tattributes\trel_triples\tatt_triples\n";
  const std::pair<const char*, GraphFiles> sides[] = {{"source", config.source_graph_files()},
                                                      {"target", config.target_graph_files()}};
  std::string notes;
  for (const auto& [name, files] : sides) {
    bool reused = false;
    const auto loaded =
        load_with_snapshot(files, config.out_dir / "snapshot" / (std::string(name) + ".kgs"), reused);
    out << stats_row(name, stats(loaded.graph)) << '\n';
    notes += std::string(name) + ": snapshot " + (reused ? "reused" : "written") +
             ", skipped attribute lines " + std::to_string(loaded.skipped_attribute_lines) + '\n';
  }
  out << notes;
  return 0;
}

int cmd_candidates(const RunConfig& config, std::ostream& out) {
  const auto ws = Workspace::load(config);
  const std::size_t k = config.pipeline.k_candidates;
  if (k == 0 || k > ws->similarity->target_count()) {
    throw Error(ErrorKind::ConfigError, "k=" + std::to_string(k) + " outside [1, " +
                                            std::to_string(ws->similarity->target_count()) + "]");
  }
  std::vector<CandidateSet> sets;
  for (const EntityId s : ws->evaluation_sources(config)) sets.push_back(top_k(s, k, *ws->similarity));
  write_file(config.out_dir / "candidates.tsv", format_candidate_lines(sets));
  const auto report = recall_at_k(sets, ws->gold_by_source);
  out << "sources: " << sets.size() << '\n';
  out << "recall@" << k << ": " << fixed4(report.recall) << '\n';
  return 0;
}

namespace {

PipelineConfig effective_pipeline(const RunConfig& config) {
  PipelineConfig p = config.pipeline;
  if (config.template_path) p.layout = PromptTemplate::load(*config.template_path);
  // More candidates than letters: switch to two-letter labels.
  if (p.k_candidates > kMaxOptions) p.extended_labels = true;
  return p;
}

void dry_run(const RunConfig& config, const PipelineConfig& pipeline, const Workspace& ws,
             std::ostream& out) {
  const auto sources = ws.evaluation_sources(config);
  const std::size_t shown = std::min<std::size_t>(3, sources.size());
  for (std::size_t i = 0; i < shown; ++i) {
    const EntityId s = sources[i];
    const auto cs = top_k(s, pipeline.k_candidates, *ws.similarity);
    const auto presented = presentation_order(cs, pipeline.order, pipeline.order_seed);
    const auto ids = cs.target_ids();
    const PromptKind kind = pipeline.only_kind.value_or(PromptKind::AttributeAware);
    SelectionMap src_sel, tgt_sel;
    PromptInputs inputs{&ws.source.graph, &ws.target.graph, nullptr, nullptr, &pipeline.layout,
                        pipeline.instruction};
    inputs.extended_labels = pipeline.extended_labels;
    if (kind != PromptKind::KnowledgeDriven) {
      const TripleKind tk =
          kind == PromptKind::AttributeAware ? TripleKind::Attribute : TripleKind::Relation;
      const std::size_t k =
          tk == TripleKind::Attribute ? pipeline.k_attributes : pipeline.k_relations;
      src_sel.emplace(s, ws.selector->select_top_triples(Side::Source, s, ids, tk, k));
      for (const EntityId c : ids) {
        tgt_sel.emplace(c, ws.selector->select_top_triples(Side::Target, c, ids, tk, k));
      }
      inputs.source_selection = &src_sel;
      inputs.target_selection = &tgt_sel;
    }
    const Prompt p = build_prompt(kind, s, presented, inputs);
    out << "--- source " << s << " (" << to_string(kind) << ") ---\n" << p.rendered << "\n";
  }
}

struct RunSummary {
  BatchResult batch;
  std::optional<HitsReport> hits;
};

RunSummary run_batch(const RunConfig& config, const PipelineConfig& pipeline, const Workspace& ws,
                     Gateway& gateway) {
  const AlignmentContext ctx{ws.source.graph, ws.target.graph, *ws.similarity, *ws.selector,
                             gateway};
  RunSummary r;
  r.batch = align_all(ws.evaluation_sources(config), pipeline, ctx);
  if (!r.batch.decisions.empty()) r.hits = hits_at_1(r.batch.decisions, ws.gold_by_source);
  return r;
}

}  // namespace

int cmd_align(const RunConfig& config, std::ostream& out) {
  const auto ws = Workspace::load(config);
  const PipelineConfig pipeline = effective_pipeline(config);
  if (config.dry_run) {
    dry_run(config, pipeline, *ws, out);
    return 0;
  }
  const auto gateway = make_gateway(config, *ws, /*experiment=*/false);
  const RunSummary r = run_batch(config, pipeline, *ws, *gateway);
  write_file(config.out_dir / "decisions.jsonl", format_decisions_jsonl(r.batch.decisions));

  out << "decisions: " << r.batch.decisions.size() << "  aborts: " << r.batch.aborts.size()
      << '\n';
  for (const Stage st : {Stage::AttributeStage, Stage::RelationStage, Stage::KnowledgeStage,
                         Stage::Fallback, Stage::Unresolved}) {
    const auto it = r.batch.stage_counts.find(st);
    if (it != r.batch.stage_counts.end()) out << "stage " << to_string(st) << ": " << it->second << '\n';
  }
  for (const auto& a : r.batch.aborts) out << "aborted: " << a.message << '\n';
  if (r.hits) {
    out << "Hits@1: " << fixed4(r.hits->hits_at_1) << '\n';
    out << "answered accuracy: " << fixed4(r.hits->answered_accuracy) << " (unresolved "
        << r.hits->unresolved << ")\n";
  }
  return r.batch.aborts.empty() ? 0 : 4;
}

namespace {

std::string table_row(const std::string& setting, const RunSummary& r) {
  const HitsReport h = r.hits.value_or(HitsReport{});
  return setting + '\t' + fixed4(h.hits_at_1) + '\t' + fixed4(h.answered_accuracy) + '\t' +
         std::to_string(h.unresolved) + '\t' + std::to_string(r.batch.aborts.size()) + '\n';
}

}  // namespace

int cmd_experiment_order(const RunConfig& config, std::ostream& out) {
  const auto ws = Workspace::load(config);
  const auto gateway = make_gateway(config, *ws, /*experiment=*/true);
  std::string table = "order\thits_at_1\tanswered_accuracy\tunresolved\taborts\n";
  bool any_abort = false;
  for (const CandidateOrder order : config.orders) {
    PipelineConfig pipeline = effective_pipeline(config);
    pipeline.order = order;
    const RunSummary r = run_batch(config, pipeline, *ws, *gateway);
    any_abort = any_abort || !r.batch.aborts.empty();
    table += table_row(std::string(to_string(order)), r);
  }
  write_file(config.out_dir / "exp_order.tsv", table);
  out << table;
  return any_abort ? 4 : 0;
}

int cmd_experiment_size(const RunConfig& config, std::ostream& out) {
  const auto ws = Workspace::load(config);
  for (const std::size_t k : config.sizes) {
    const std::size_t cap = std::min(kMaxExtendedOptions, ws->similarity->target_count());
    if (k == 0 || k > cap) {
      throw Error(ErrorKind::ConfigError, "candidate size " + std::to_string(k) +
                                              " outside [1, " + std::to_string(cap) + "]");
    }
  }
  const auto gateway = make_gateway(config, *ws, /*experiment=*/true);
  std::string table = "candidates\thits_at_1\tanswered_accuracy\tunresolved\taborts\n";
  bool any_abort = false;
  for (const std::size_t k : config.sizes) {
    PipelineConfig pipeline = effective_pipeline(config);
    pipeline.k_candidates = k;
    pipeline.extended_labels = pipeline.extended_labels || k > kMaxOptions;
    const RunSummary r = run_batch(config, pipeline, *ws, *gateway);
    any_abort = any_abort || !r.batch.aborts.empty();
    table += table_row(std::to_string(k), r);
  }
  write_file(config.out_dir / "exp_size.tsv", table);
  out << table;
  return any_abort ? 4 : 0;
}

int cmd_gen_fixture(const RunConfig& config, std::ostream& out) {
  FixtureSpec spec = config.fixture;
  spec.seed = config.seed;
  const auto manifest = generate_fixture(spec, config.out_dir);
  out << "fixture: " << config.out_dir.string() << '\n';
  out << "entities: " << spec.entities << "  corrupted sources: " << manifest.corrupted << '\n';
  out << "recall@" << spec.recall_k << ": " << fixed4(manifest.recall_at_k) << '\n';
  return 0;
}

}  // namespace kgalign
