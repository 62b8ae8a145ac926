#include <CLI11.hpp>

#include <ostream>
#include <sstream>

#include "kgalign/harness.hpp"

namespace kgalign {

namespace {

struct Flags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> oracle;
  std::optional<std::string> endpoint;
  std::optional<std::string> model;
  std::optional<std::size_t> k;
  std::optional<std::size_t> votes;
  std::optional<std::string> out;
  std::optional<std::string> data_dir;
  std::optional<std::string> gold;
  std::optional<std::string> source_embeddings;
  std::optional<std::string> target_embeddings;
  std::optional<std::string> scores;
  std::optional<std::string> fallback;
  std::optional<std::string> order;
  std::optional<std::string> orders;
  std::optional<std::string> sizes;
  std::optional<std::string> prompt_kind;
  std::optional<std::size_t> limit;
  std::optional<std::size_t> sample;
  std::optional<std::size_t> parallelism;
  std::optional<std::string> template_path;
  bool no_identity_first = false;
  bool allow_remote = false;
  bool dry_run = false;
  // gen-fixture
  std::optional<std::size_t> entities;
  std::optional<double> noise;
  std::optional<std::size_t> dim;
};

void add_common(CLI::App& app, Flags& f) {
  app.add_option("--config", f.config_path, "key = value config file");
  app.add_option("--seed", f.seed, "master seed");
  app.add_option("--out", f.out, "output directory");
  app.add_option("--data", f.data_dir, "dataset directory (DBP15K layout)");
}

void add_data(CLI::App& app, Flags& f) {
  app.add_option("--gold", f.gold, "gold alignment file");
  app.add_option("--source-embeddings", f.source_embeddings);
  app.add_option("--target-embeddings", f.target_embeddings);
  app.add_option("--scores", f.scores, "precomputed similarity TSV");
  app.add_option("--k", f.k, "candidates per source");
  app.add_option("--limit", f.limit, "first N gold sources");
  app.add_option("--sample", f.sample, "seeded random N gold sources");
}

void add_alignment(CLI::App& app, Flags& f) {
  app.add_option("--oracle", f.oracle, "truthful | first | biased | fixed:TEXT");
  app.add_option("--endpoint", f.endpoint, "chat-completions URL");
  app.add_option("--model", f.model);
  app.add_option("--votes", f.votes, "permutations per vote");
  app.add_option("--fallback", f.fallback, "top-similarity | none");
  app.add_option("--order", f.order, "similarity | random | reversed");
  app.add_option("--prompt-kind", f.prompt_kind, "knowledge | attribute | relation");
  app.add_option("--parallelism", f.parallelism);
  app.add_option("--template", f.template_path, "prompt layout file");
  app.add_flag("--no-identity-first", f.no_identity_first);
}

RunConfig build_config(const Flags& f) {
  RunConfig c;
  if (!f.config_path.empty()) apply_config_file(c, f.config_path);
  apply_environment(c);

  // Flags that share the config parser's value syntax go through it.
  std::ostringstream text;
  const auto put = [&](const char* key, const auto& v) {
    if (v) text << key << " = " << *v << '\n';
  };
  put("seed", f.seed);
  put("oracle", f.oracle);
  put("endpoint", f.endpoint);
  put("model", f.model);
  put("k", f.k);
  put("votes", f.votes);
  put("out", f.out);
  put("data_dir", f.data_dir);
  put("gold", f.gold);
  put("source_embeddings", f.source_embeddings);
  put("target_embeddings", f.target_embeddings);
  put("scores", f.scores);
  put("fallback", f.fallback);
  put("order", f.order);
  put("orders", f.orders);
  put("sizes", f.sizes);
  put("prompt_kind", f.prompt_kind);
  put("limit", f.limit);
  put("sample", f.sample);
  put("parallelism", f.parallelism);
  put("template", f.template_path);
  apply_config_text(c, text.str());

  if (f.no_identity_first) c.pipeline.vote.identity_first = false;
  c.allow_remote = f.allow_remote;
  c.dry_run = f.dry_run;
  if (f.entities) c.fixture.entities = *f.entities;
  if (f.noise) c.fixture.noise = *f.noise;
  if (f.dim) c.fixture.dim = *f.dim;
  return c;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Entity alignment with LLM reasoning over KG triples"};
  app.require_subcommand(1);
  Flags f;

  auto* ingest = app.add_subcommand("ingest", "load both KGs and print statistics");
  add_common(*ingest, f);

  auto* candidates = app.add_subcommand("candidates", "top-k retrieval and recall");
  add_common(*candidates, f);
  add_data(*candidates, f);

  auto* align = app.add_subcommand("align", "align gold sources and report Hits@1");
  add_common(*align, f);
  add_data(*align, f);
  add_alignment(*align, f);
  align->add_flag("--dry-run", f.dry_run, "print the first three prompts and exit");

  auto* exp_order = app.add_subcommand("exp-order", "Hits@1 per candidate order");
  add_common(*exp_order, f);
  add_data(*exp_order, f);
  add_alignment(*exp_order, f);
  exp_order->add_option("--orders", f.orders, "comma-separated orders");
  exp_order->add_flag("--allow-remote", f.allow_remote);

  auto* exp_size = app.add_subcommand("exp-size", "Hits@1 per candidate-set size");
  add_common(*exp_size, f);
  add_data(*exp_size, f);
  add_alignment(*exp_size, f);
  exp_size->add_option("--sizes", f.sizes, "comma-separated sizes");
  exp_size->add_flag("--allow-remote", f.allow_remote);

  auto* gen = app.add_subcommand("gen-fixture", "write a synthetic aligned KG pair");
  add_common(*gen, f);
  gen->add_option("--entities", f.entities);
  gen->add_option("--noise", f.noise, "share of source embeddings replaced");
  gen->add_option("--dim", f.dim);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::ostringstream cli_out;
    const int code = app.exit(e, cli_out, err);
    out << cli_out.str();
    return code == 0 ? 0 : 2;
  }

  try {
    const RunConfig config = build_config(f);
    if (*ingest) return cmd_ingest(config, out);
    if (*candidates) return cmd_candidates(config, out);
    if (*align) return cmd_align(config, out);
    if (*exp_order) return cmd_experiment_order(config, out);
    if (*exp_size) return cmd_experiment_size(config, out);
    if (*gen) return cmd_gen_fixture(config, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  }
  return 2;
}

}  // namespace kgalign
