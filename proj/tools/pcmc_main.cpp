// pcmc: discrete-choice toolkit command line.
//
// Subcommands: datagen, train, eval, heatmap, gradcheck, search.
// Every command writes a manifest (resolved config + seed + input digests)
// next to its outputs; re-running with the same manifest reproduces them.
// Exit codes: 0 success, 2 validation/schema error, 3 numeric failure, 4 I/O.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pcmc/baselines.hpp"
#include "pcmc/checkpoint.hpp"
#include "pcmc/datagen.hpp"
#include "pcmc/errors.hpp"
#include "pcmc/evaluate.hpp"
#include "pcmc/gradcheck.hpp"
#include "pcmc/manifest.hpp"
#include "pcmc/mle.hpp"
#include "pcmc/train.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;
using namespace pcmc;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

void ensure_out_dir(const fs::path& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create output directory " + out.string());
}

// JSON config file support: values apply only to options the command line
// did not set, so flags win on conflict. A run manifest works directly as a
// config file (its nested "config" object and top-level seed are merged),
// which is what makes reruns-from-manifest a one-flag operation.
void apply_config_file(CLI::App* cmd, const std::string& config_path) {
  if (config_path.empty()) return;
  std::ifstream in(config_path);
  if (!in) throw IoError("cannot open config file " + config_path);
  ordered_json config;
  try {
    in >> config;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("config file: invalid JSON: " + std::string(e.what()));
  }
  if (config.contains("config") && config["config"].is_object()) {
    ordered_json flattened = config["config"];
    if (config.contains("seed") && !flattened.contains("seed")) {
      flattened["seed"] = config["seed"];
    }
    config = std::move(flattened);
  }
  for (const auto& [key, value] : config.items()) {
    CLI::Option* opt = cmd->get_option_no_throw("--" + key);
    if (opt == nullptr || opt->count() > 0) continue;
    if (value.is_null()) continue;
    const std::string text = value.is_string() ? value.get<std::string>() : value.dump();
    opt->add_result(text);
    opt->run_callback();
  }
}

struct ArchFlags {
  int hidden = 2;
  int nodes = 16;
  std::string activation = "leaky_relu";
  double epsilon = 0.5;
  double dropout = 0.0;
  double lr = 1e-3;
  int batch = 1;
  int epochs = 100;
  int patience = 5;
  double min_delta = 0.01;
  bool one_hot = false;
  bool refit_full = false;
  std::string preset;

  void add_options(CLI::App* cmd) {
    cmd->add_option("--hidden", hidden, "Hidden layers in f_wq (0-3)");
    cmd->add_option("--nodes", nodes, "Nodes per hidden layer");
    cmd->add_option("--activation", activation, "relu|sigmoid|tanh|leaky_relu");
    cmd->add_option("--epsilon", epsilon, "Additive rate floor (> 0)");
    cmd->add_option("--dropout", dropout, "Dropout probability in [0,1)");
    cmd->add_option("--lr", lr, "Learning rate");
    cmd->add_option("--batch", batch, "Batch size in sessions");
    cmd->add_option("--epochs", epochs, "Maximum training epochs");
    cmd->add_option("--patience", patience, "Early-stopping patience (epochs)");
    cmd->add_option("--min-delta", min_delta, "Early-stopping minimum improvement");
    cmd->add_flag("--one-hot", one_hot, "Fixed one-hot categorical representation");
    cmd->add_flag("--refit-full", refit_full,
                  "After early stopping, retrain on train+validation for the stopped epochs");
    cmd->add_option("--preset", preset,
                    "Config preset: 'synthetic' (lr 1e-3, batch 1, eps 0.5, 100 epochs, no "
                    "dropout, 16 nodes) or 'airline' (Table-2 style: lr 1e-3, batch 16, 2x512, "
                    "leaky_relu, dropout 0.5)");
  }

  // Presets fill values the user did not set explicitly.
  void apply_preset(CLI::App* cmd) {
    if (preset.empty()) return;
    const auto given = [&](const std::string& name) {
      const CLI::Option* opt = cmd->get_option_no_throw(name);
      return opt != nullptr && opt->count() > 0;
    };
    if (preset == "synthetic") {
      if (!given("--lr")) lr = 1e-3;
      if (!given("--batch")) batch = 1;
      if (!given("--epsilon")) epsilon = 0.5;
      if (!given("--epochs")) epochs = 100;
      if (!given("--dropout")) dropout = 0.0;
      if (!given("--nodes")) nodes = 16;
      if (!given("--hidden")) hidden = 3;
      if (!given("--activation")) activation = "leaky_relu";
    } else if (preset == "airline") {
      if (!given("--lr")) lr = 1e-3;
      if (!given("--batch")) batch = 16;
      if (!given("--hidden")) hidden = 2;
      if (!given("--nodes")) nodes = 512;
      if (!given("--activation")) activation = "leaky_relu";
      if (!given("--dropout")) dropout = 0.5;
      if (!given("--epsilon")) epsilon = 0.5;
    } else {
      throw ValidationError("unknown preset '" + preset + "'");
    }
  }

  ArchitectureConfig to_config(std::uint64_t seed) const {
    ArchitectureConfig c;
    c.hidden_layers = hidden;
    c.nodes_per_layer = nodes;
    c.activation = activation_from_name(activation);
    c.epsilon = epsilon;
    c.dropout = dropout;
    c.learning_rate = lr;
    c.batch_size = batch;
    c.max_epochs = epochs;
    c.patience = patience;
    c.min_delta = min_delta;
    c.seed = seed;
    c.one_hot_categoricals = one_hot;
    c.refit_on_full = refit_full;
    return c;
  }

  ordered_json to_json() const {
    ordered_json o;
    o["hidden"] = hidden;
    o["nodes"] = nodes;
    o["activation"] = activation;
    o["epsilon"] = epsilon;
    o["dropout"] = dropout;
    o["lr"] = lr;
    o["batch"] = batch;
    o["epochs"] = epochs;
    o["patience"] = patience;
    o["min-delta"] = min_delta;
    o["one-hot"] = one_hot;
    o["refit-full"] = refit_full;
    return o;
  }
};

// ---------------------------------------------------------------------------
// datagen

int cmd_datagen(const std::string& kind, std::size_t n, double alpha, std::size_t universe,
                std::size_t max_set, double singleton_prob, std::uint64_t seed,
                const fs::path& out) {
  ensure_out_dir(out);
  FeatureSchema schema;
  Dataset data;

  if (kind == "rps") {
    schema = datagen::rps_schema();
    data = datagen::sample_rps_sessions(alpha, n, seed);
  } else if (kind == "random-pcmc") {
    schema = datagen::indexed_schema(universe);
    const RateMatrix q = datagen::random_pcmc(universe, seed);
    data = datagen::sample_indexed_sessions(q, n, std::min(max_set, universe), seed);
  } else if (kind == "context") {
    schema = datagen::context_schema();
    data = datagen::sample_context_sessions(n, seed);
  } else if (kind == "context-binned") {
    // Discretized variant: c snapped to an 8x8 grid, items indexed for the
    // direct-MLE baseline (a=0, b=1, bins 2..65).
    schema = datagen::indexed_schema(66);
    Dataset continuous = datagen::sample_context_sessions(n, seed);
    for (Session& s : continuous) {
      Session d;
      d.chosen_index = s.chosen_index;
      for (std::size_t i = 0; i < 3; ++i) {
        FeatureTuple alt;
        if (i < 2) {
          alt.categorical.push_back("item" + std::to_string(i));
        } else {
          const std::size_t bin =
              datagen::context_bin_index(s.alternatives[2].numeric[0],
                                         s.alternatives[2].numeric[1], 8);
          alt.categorical.push_back("item" + std::to_string(2 + bin));
        }
        d.alternatives.push_back(std::move(alt));
      }
      data.push_back(std::move(d));
    }
  } else if (kind == "airline") {
    datagen::AirlineGenOptions options;
    options.n_sessions = n;
    options.max_set_size = max_set;
    options.singleton_prob = singleton_prob;
    options.seed = seed;
    schema = datagen::airline_schema();
    data = datagen::airline_synthetic(options);
  } else {
    throw ValidationError("datagen: unknown kind '" + kind + "'");
  }

  save_schema(schema, out / "schema.json");
  save_sessions_jsonl(data, schema, out / "sessions.jsonl");

  Manifest manifest;
  manifest.command = "datagen";
  manifest.seed = seed;
  ordered_json cfg;
  cfg["kind"] = kind;
  cfg["n"] = n;
  cfg["alpha"] = alpha;
  cfg["universe"] = universe;
  cfg["max-set-size"] = max_set;
  cfg["singleton-prob"] = singleton_prob;
  cfg["seed"] = seed;
  manifest.resolved_config_json = cfg.dump();
  manifest.write(out / "manifest.json");

  std::cout << "wrote " << data.size() << " sessions to " << (out / "sessions.jsonl").string()
            << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train

int cmd_train(const std::string& model_kind, const fs::path& data_path,
              const fs::path& schema_path, const fs::path& out, const ArchFlags& arch,
              std::uint64_t seed) {
  ensure_out_dir(out);
  const FeatureSchema schema = load_schema(schema_path);
  const Dataset data = load_sessions_jsonl(data_path, schema);
  const fs::path checkpoint_path = out / "checkpoint.json";

  ordered_json cfg = arch.to_json();
  cfg["model"] = model_kind;
  cfg["seed"] = seed;

  if (model_kind == "pcmcnet") {
    const ArchitectureConfig config = arch.to_config(seed);
    const TrainResult result = train_pcmc_net(schema, data, config);
    save_pcmc_net(result.model, checkpoint_path);
    write_training_log_csv(result.log, out / "train_log.csv");
    std::cout << "best validation NLL " << result.best_val_nll << " at epoch "
              << result.best_epoch << " (stopped after " << result.stopped_epoch << ")\n";
  } else if (model_kind == "mnl") {
    const MnlFitResult fit = fit_mnl(schema, data);
    if (fit.separation_warning) {
      std::cerr << "warning: weight norm exceeds separation threshold\n";
    }
    save_mnl(fit.model, checkpoint_path);
    std::cout << "mnl mean log-likelihood " << fit.mean_log_likelihood << " after "
              << fit.iterations << " iterations\n";
  } else if (model_kind == "pcmc-mle") {
    if (schema.alternative_fields.size() != 1 ||
        schema.alternative_fields[0].kind != FieldKind::categorical) {
      throw ValidationError(
          "pcmc-mle needs a schema with exactly one categorical alternative field");
    }
    // Universe = levels observed in training, index-based by design.
    std::set<std::string> levels;
    for (const Session& s : data) {
      for (const FeatureTuple& alt : s.alternatives) levels.insert(alt.categorical.at(0));
    }
    std::vector<std::string> level_list(levels.begin(), levels.end());
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < level_list.size(); ++i) index[level_list[i]] = i;

    std::vector<mle::IndexSession> sessions;
    sessions.reserve(data.size());
    for (const Session& s : data) {
      mle::IndexSession is;
      for (const FeatureTuple& alt : s.alternatives) {
        is.set.push_back(index.at(alt.categorical.at(0)));
      }
      is.chosen = s.chosen_index;
      sessions.push_back(std::move(is));
    }
    const mle::ChoiceCounts counts = mle::aggregate_counts(sessions, level_list.size());
    mle::MleOptions options;
    options.seed = seed;
    const mle::MleResult fit = mle::fit_mle(counts, level_list.size(), options);
    const PcmcMleModel model(schema, fit.q, level_list);
    save_mle(model, checkpoint_path);
    std::cout << "pcmc-mle log-likelihood " << fit.log_likelihood << " (restart "
              << fit.best_restart << ")\n";
  } else if (model_kind == "uniform" || model_kind == "cheapest" || model_kind == "shortest") {
    save_ranker(model_kind, schema, checkpoint_path);
  } else {
    throw ValidationError("train: unknown model '" + model_kind + "'");
  }

  Manifest manifest;
  manifest.command = "train";
  manifest.seed = seed;
  manifest.resolved_config_json = cfg.dump();
  manifest.input_digests["data"] = file_digest(data_path);
  manifest.input_digests["schema"] = file_digest(schema_path);
  manifest.write(out / "manifest.json");
  return 0;
}

// ---------------------------------------------------------------------------
// eval

int cmd_eval(const fs::path& checkpoint_path, const fs::path& data_path,
             const fs::path& schema_path, const fs::path& out, bool with_rankers, int threads,
             std::uint64_t seed) {
  ensure_out_dir(out);
  const FeatureSchema schema = load_schema(schema_path);
  const Dataset data = load_sessions_jsonl(data_path, schema);

  const std::unique_ptr<ChoiceModel> model = load_any_model(checkpoint_path);
  if (schema_to_json(model->schema()) != schema_to_json(schema)) {
    throw ValidationError("eval: checkpoint schema does not match the data schema");
  }

  ordered_json cfg;
  cfg["checkpoint"] = checkpoint_path.string();
  cfg["rankers"] = with_rankers;
  cfg["threads"] = threads;
  cfg["seed"] = seed;
  Manifest manifest;
  manifest.command = "eval";
  manifest.seed = seed;
  manifest.resolved_config_json = cfg.dump();
  manifest.input_digests["data"] = file_digest(data_path);
  manifest.input_digests["schema"] = file_digest(schema_path);
  manifest.input_digests["checkpoint"] = file_digest(checkpoint_path);

  const auto report_one = [&](const ChoiceModel& m) {
    eval::EvalReport report = eval::evaluate(m, data, seed, threads);
    report.config_hash = manifest.config_hash();
    const fs::path path = out / ("report_" + m.kind() + ".json");
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path.string());
    f << report.to_json() << "\n";
    std::cout << report.to_json() << "\n";
  };

  report_one(*model);
  if (with_rankers) {
    report_one(UniformModel(schema));
    for (const char* kind : {"cheapest", "shortest"}) {
      try {
        report_one(FieldRanker(kind, schema, kind == std::string("cheapest")
                                                  ? "price"
                                                  : "trip_duration"));
      } catch (const ValidationError& e) {
        std::cerr << "skipping " << kind << ": " << e.what() << "\n";
      }
    }
  }

  manifest.write(out / "manifest.json");
  return 0;
}

// ---------------------------------------------------------------------------
// heatmap

int cmd_heatmap(const fs::path& checkpoint_path, const fs::path& out, std::size_t grid,
                bool use_oracle) {
  ensure_out_dir(out);
  eval::ContextDist dist;
  std::string kind;
  std::unique_ptr<ChoiceModel> model;

  if (use_oracle) {
    kind = "oracle";
    dist = [](double c1, double c2) { return datagen::context_oracle(c1, c2); };
  } else {
    model = load_any_model(checkpoint_path);
    kind = model->kind();
    const FeatureSchema schema = model->schema();
    if (schema.alternative_fields.size() != 2 ||
        schema.alternative_fields[0].kind != FieldKind::numeric ||
        schema.alternative_fields[1].kind != FieldKind::numeric) {
      throw ValidationError(
          "heatmap: checkpoint must be trained on the two-attribute context schema");
    }
    dist = [&](double c1, double c2) {
      Session s;
      s.alternatives.resize(3);
      s.alternatives[0].numeric = {datagen::kContextA[0], datagen::kContextA[1]};
      s.alternatives[1].numeric = {datagen::kContextB[0], datagen::kContextB[1]};
      s.alternatives[2].numeric = {c1, c2};
      return model->predict(s);
    };
  }

  const eval::Heatmap map = eval::heatmap(dist, grid);
  eval::write_heatmap_csv(map, out / ("heatmap_" + kind + ".csv"));
  eval::write_heatmap_pgm(map, out / ("heatmap_" + kind + ".pgm"));

  const double range = map.max_value() - map.min_value();
  std::cout << "heatmap range " << range << "\n";
  if (range < 1e-10) {
    std::cout << "constant field detected (IIA model: the a-vs-b preference ignores c)\n";
  }

  Manifest manifest;
  manifest.command = "heatmap";
  manifest.seed = 0;
  ordered_json cfg;
  cfg["grid"] = grid;
  cfg["oracle"] = use_oracle;
  if (!use_oracle) {
    cfg["checkpoint"] = checkpoint_path.string();
    manifest.input_digests["checkpoint"] = file_digest(checkpoint_path);
  }
  manifest.resolved_config_json = cfg.dump();
  manifest.write(out / "manifest.json");
  return 0;
}

// ---------------------------------------------------------------------------
// gradcheck

int cmd_gradcheck(int trials, std::uint64_t seed) {
  const auto results = gradcheck::check_primitives(seed, trials);
  const auto e2e = gradcheck::check_pcmc_net_loss(seed, trials);

  std::printf("%-28s %14s %12s\n", "op", "max_rel_error", "comparisons");
  double worst = 0.0;
  for (const auto& r : results) {
    std::printf("%-28s %14.3e %12zu\n", r.name.c_str(), r.max_rel_error, r.comparisons);
    worst = std::max(worst, r.max_rel_error);
  }
  std::printf("%-28s %14.3e %12zu\n", e2e.name.c_str(), e2e.max_rel_error, e2e.comparisons);

  const bool primitives_ok = worst < 1e-5;
  const bool e2e_ok = e2e.max_rel_error < 1e-4;
  std::printf("primitives %s, end-to-end %s\n", primitives_ok ? "PASS" : "FAIL",
              e2e_ok ? "PASS" : "FAIL");
  return (primitives_ok && e2e_ok) ? 0 : kExitNumeric;
}

// ---------------------------------------------------------------------------
// search

int cmd_search(const fs::path& data_path, const fs::path& schema_path, const fs::path& out,
               int budget, const ArchFlags& arch, std::uint64_t seed) {
  ensure_out_dir(out);
  const FeatureSchema schema = load_schema(schema_path);
  const Dataset data = load_sessions_jsonl(data_path, schema);

  const SearchResult result =
      random_search(schema, data, SearchSpace{}, budget, arch.to_config(seed), seed);

  const fs::path csv_path = out / "leaderboard.csv";
  std::ofstream csv(csv_path);
  if (!csv) throw IoError("cannot write " + csv_path.string());
  csv << "rank,trial,val_nll,best_epoch,lr,batch,hidden,nodes,activation\n";
  csv.precision(17);
  for (std::size_t rank = 0; rank < result.leaderboard.size(); ++rank) {
    const SearchTrial& t = result.leaderboard[rank];
    csv << rank + 1 << "," << t.trial << "," << t.val_nll << "," << t.best_epoch << ","
        << t.config.learning_rate << "," << t.config.batch_size << "," << t.config.hidden_layers
        << "," << t.config.nodes_per_layer << "," << activation_name(t.config.activation)
        << "\n";
  }

  Manifest manifest;
  manifest.command = "search";
  manifest.seed = seed;
  ordered_json cfg = arch.to_json();
  cfg["budget"] = budget;
  cfg["seed"] = seed;
  manifest.resolved_config_json = cfg.dump();
  manifest.input_digests["data"] = file_digest(data_path);
  manifest.input_digests["schema"] = file_digest(schema_path);
  manifest.write(out / "manifest.json");

  std::cout << "best val NLL " << result.leaderboard.front().val_nll << " (trial "
            << result.leaderboard.front().trial << "), leaderboard at " << csv_path.string()
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pairwise Choice Markov Chain toolkit"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  std::string config_file;

  // datagen
  auto* datagen_cmd = app.add_subcommand("datagen", "Generate synthetic choice data");
  std::string dg_kind = "context";
  std::size_t dg_n = 1000, dg_universe = 8, dg_max_set = 50;
  double dg_alpha = 0.75, dg_singleton = 0.1;
  fs::path dg_out = "out";
  datagen_cmd->add_option("--kind", dg_kind, "rps|random-pcmc|context|context-binned|airline");
  datagen_cmd->add_option("--n", dg_n, "Number of sessions");
  datagen_cmd->add_option("--alpha", dg_alpha, "RPS alpha in (1/2, 1]");
  datagen_cmd->add_option("--universe", dg_universe, "Universe size for random-pcmc");
  datagen_cmd->add_option("--max-set-size", dg_max_set, "Maximum alternatives per session");
  datagen_cmd->add_option("--singleton-prob", dg_singleton,
                          "Share of singleton sessions (airline)");
  datagen_cmd->add_option("--out", dg_out, "Output directory")->required();
  datagen_cmd->add_option("--seed", seed, "Global seed");
  datagen_cmd->add_option("--config", config_file, "JSON config file (flags win)");

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a model and write a checkpoint");
  std::string tr_model = "pcmcnet";
  fs::path tr_data, tr_schema, tr_out = "out";
  ArchFlags tr_arch;
  train_cmd->add_option("--model", tr_model, "pcmcnet|mnl|pcmc-mle|uniform|cheapest|shortest");
  train_cmd->add_option("--data", tr_data, "Training sessions (JSONL)")->required();
  train_cmd->add_option("--schema", tr_schema, "Schema JSON")->required();
  train_cmd->add_option("--out", tr_out, "Output directory")->required();
  tr_arch.add_options(train_cmd);
  train_cmd->add_option("--seed", seed, "Global seed");
  train_cmd->add_option("--config", config_file, "JSON config file (flags win)");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a test set");
  fs::path ev_checkpoint, ev_data, ev_schema, ev_out = "out";
  bool ev_rankers = false;
  int ev_threads = 1;
  eval_cmd->add_option("--checkpoint", ev_checkpoint, "Model checkpoint")->required();
  eval_cmd->add_option("--data", ev_data, "Test sessions (JSONL)")->required();
  eval_cmd->add_option("--schema", ev_schema, "Schema JSON")->required();
  eval_cmd->add_option("--out", ev_out, "Output directory")->required();
  eval_cmd->add_flag("--rankers", ev_rankers, "Also evaluate uniform/cheapest/shortest");
  eval_cmd->add_option("--threads", ev_threads, "Evaluation worker cap");
  eval_cmd->add_option("--seed", seed, "Tie-break seed");
  eval_cmd->add_option("--config", config_file, "JSON config file (flags win)");

  // heatmap
  auto* heatmap_cmd = app.add_subcommand("heatmap", "Preference-for-a heatmap over c");
  fs::path hm_checkpoint, hm_out = "out";
  std::size_t hm_grid = 64;
  bool hm_oracle = false;
  heatmap_cmd->add_option("--checkpoint", hm_checkpoint, "Model checkpoint");
  heatmap_cmd->add_option("--out", hm_out, "Output directory")->required();
  heatmap_cmd->add_option("--grid", hm_grid, "Grid resolution");
  heatmap_cmd->add_flag("--oracle", hm_oracle, "Render the built-in context oracle");

  // gradcheck
  auto* gradcheck_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient suite");
  int gc_trials = 100;
  gradcheck_cmd->add_option("--trials", gc_trials, "Trials per operator");
  gradcheck_cmd->add_option("--seed", seed, "Seed");

  // search
  auto* search_cmd = app.add_subcommand("search", "Seeded random hyperparameter search");
  fs::path se_data, se_schema, se_out = "out";
  int se_budget = 25;
  ArchFlags se_arch;
  search_cmd->add_option("--data", se_data, "Training sessions (JSONL)")->required();
  search_cmd->add_option("--schema", se_schema, "Schema JSON")->required();
  search_cmd->add_option("--out", se_out, "Output directory")->required();
  search_cmd->add_option("--budget", se_budget, "Number of sampled configurations");
  se_arch.add_options(search_cmd);
  search_cmd->add_option("--seed", seed, "Global seed");
  search_cmd->add_option("--config", config_file, "JSON config file (flags win)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (datagen_cmd->parsed()) {
      apply_config_file(datagen_cmd, config_file);
      return cmd_datagen(dg_kind, dg_n, dg_alpha, dg_universe, dg_max_set, dg_singleton, seed,
                         dg_out);
    }
    if (train_cmd->parsed()) {
      apply_config_file(train_cmd, config_file);
      tr_arch.apply_preset(train_cmd);
      return cmd_train(tr_model, tr_data, tr_schema, tr_out, tr_arch, seed);
    }
    if (eval_cmd->parsed()) {
      apply_config_file(eval_cmd, config_file);
      return cmd_eval(ev_checkpoint, ev_data, ev_schema, ev_out, ev_rankers, ev_threads, seed);
    }
    if (heatmap_cmd->parsed()) {
      return cmd_heatmap(hm_checkpoint, hm_out, hm_grid, hm_oracle);
    }
    if (gradcheck_cmd->parsed()) {
      return cmd_gradcheck(gc_trials, seed);
    }
    if (search_cmd->parsed()) {
      apply_config_file(search_cmd, config_file);
      se_arch.apply_preset(search_cmd);
      return cmd_search(se_data, se_schema, se_out, se_budget, se_arch, seed);
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  }
  return 0;
}
