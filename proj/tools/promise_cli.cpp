#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "promise/evaluation.hpp"
#include "promise/io.hpp"

using namespace promise;

namespace {

// Applies a key when present, leaving the default otherwise.
template <typename T>
void maybe_set(const Json& j, const char* key, T& out) {
  const auto it = j.find(key);
  if (it != j.end()) out = it->get<T>();
}

AdamConfig adam_from_json(const Json& j, AdamConfig cfg) {
  maybe_set(j, "step_size", cfg.step_size);
  maybe_set(j, "beta1", cfg.beta1);
  maybe_set(j, "beta2", cfg.beta2);
  maybe_set(j, "epsilon", cfg.epsilon);
  return cfg;
}

GpConfig gp_overlay_from_json(const Json& j, GpConfig cfg) {
  maybe_set(j, "signal_variance", cfg.signal_variance);
  maybe_set(j, "length_scale", cfg.length_scale);
  maybe_set(j, "noise_variance", cfg.noise_variance);
  maybe_set(j, "budget", cfg.budget);
  maybe_set(j, "novelty_threshold", cfg.novelty_threshold);
  return cfg;
}

SourceTrainConfig collect_from_json(const Json& j, SourceTrainConfig cfg) {
  maybe_set(j, "refit_every", cfg.refit_every);
  maybe_set(j, "eps_start", cfg.eps_start);
  maybe_set(j, "eps_end", cfg.eps_end);
  if (j.contains("gp")) cfg.gp = gp_overlay_from_json(j.at("gp"), cfg.gp);
  return cfg;
}

TransferConfig transfer_from_json(const Json& j, TransferConfig cfg) {
  maybe_set(j, "gamma", cfg.gamma);
  maybe_set(j, "lambda1", cfg.lambda1);
  maybe_set(j, "lambda2", cfg.lambda2);
  maybe_set(j, "lambda3", cfg.lambda3);
  maybe_set(j, "lambda4", cfg.lambda4);
  maybe_set(j, "epochs", cfg.epochs);
  maybe_set(j, "minibatch", cfg.minibatch);
  maybe_set(j, "embed_dim", cfg.embed_dim);
  maybe_set(j, "seed", cfg.seed);
  maybe_set(j, "restarts", cfg.restarts);
  maybe_set(j, "source_sentence_cap", cfg.source_sentence_cap);
  if (j.contains("adam")) cfg.adam = adam_from_json(j.at("adam"), cfg.adam);
  if (j.contains("predictor")) {
    const Json& p = j.at("predictor");
    maybe_set(p, "epochs", cfg.predictor.epochs);
    if (p.contains("adam")) cfg.predictor.adam = adam_from_json(p.at("adam"), cfg.predictor.adam);
  }
  return cfg;
}

Json check_config_file(const std::string& path) {
  const Json j = parse_json_file(path);
  if (!j.is_object()) throw ConfigError(path + ": expected a JSON object");
  const auto it = j.find("schema");
  if (it == j.end() || !it->is_number_integer() || it->get<int>() != 1)
    throw ConfigError(path + ": config needs \"schema\": 1");
  return j;
}

void emit(const Json& j) { std::cout << j.dump(2) << "\n"; }

// The improving-learner collection protocol: target-domain dialogues logged
// while a fresh agent trains on them from scratch.
std::vector<EpisodeLog> collect_target_logs(const Ontology& target, int n, std::uint64_t seed,
                                            const SourceTrainConfig& cfg) {
  return train_source_policy(target, n, mix_seed(seed, "target"), cfg).logs;
}

struct TrainSourceArgs {
  std::string ontology_path;
  std::string out_path;
  int episodes = 300;
  std::uint64_t seed = 0;
  SourceTrainConfig train;
};

int cmd_train_source(const TrainSourceArgs& a) {
  const Ontology ont = load_ontology(a.ontology_path);
  std::cerr << "training source policy on " << ont.name() << " (" << a.episodes
            << " episodes, seed " << a.seed << ")\n";
  auto result = train_source_policy(ont, a.episodes, a.seed, a.train);
  SourceSnapshot snap;
  snap.ontology = ont.name();
  snap.seed = a.seed;
  snap.episodes = a.episodes;
  snap.model = result.model;
  snap.logs = std::move(result.logs);
  save_source_snapshot(a.out_path, snap);
  std::cerr << "saved snapshot to " << a.out_path << " (" << snap.model->size()
            << " retained points)\n";
  Json out;
  out["command"] = "train-source";
  out["ontology"] = ont.name();
  out["episodes"] = a.episodes;
  out["seed"] = a.seed;
  out["gp_points"] = snap.model->size();
  out["out"] = a.out_path;
  emit(out);
  return 0;
}

struct TransferArgs {
  std::string snapshot_path;
  std::string source_ontology_path;
  std::string target_ontology_path;
  std::string target_logs_path;
  std::string alias_path;
  std::string config_path;
  std::string out_path;
  std::string variant = "promise";
  int collect = 0;
  int eval_episodes = 100;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

int cmd_transfer(const TransferArgs& a) {
  const Variant variant = parse_variant(a.variant);
  const Ontology source = load_ontology(a.source_ontology_path);
  const Ontology target = load_ontology(a.target_ontology_path);
  const SourceSnapshot snap = load_source_snapshot(a.snapshot_path);
  if (snap.ontology != source.name())
    throw ConfigError("snapshot was trained on '" + snap.ontology +
                      "' but the source ontology is '" + source.name() + "'");

  VariantInputs in;
  in.source_q = snap.model;
  in.source = &source;
  in.target = &target;
  in.source_logs = snap.logs;
  in.cfg.seed = a.seed;
  in.gp = snap.model->config();
  if (!a.config_path.empty()) {
    const Json cfg = check_config_file(a.config_path);
    if (cfg.contains("transfer")) in.cfg = transfer_from_json(cfg.at("transfer"), in.cfg);
    if (cfg.contains("gp")) in.gp = gp_overlay_from_json(cfg.at("gp"), in.gp);
    if (a.seed_given) in.cfg.seed = a.seed;
  }
  if (!a.alias_path.empty()) in.alias = load_alias(a.alias_path);

  if (!a.target_logs_path.empty()) {
    in.target_logs = load_episodes_jsonl(a.target_logs_path);
  } else if (a.collect > 0) {
    std::cerr << "collecting " << a.collect << " target dialogues on " << target.name() << "\n";
    in.target_logs = collect_target_logs(target, a.collect, a.seed, SourceTrainConfig{});
  } else {
    throw ConfigError("provide --target-logs or --collect N");
  }

  std::cerr << "building variant " << variant_name(variant) << " from "
            << in.target_logs.size() << " target dialogues\n";
  VariantPolicy vp = build_variant(variant, in);
  const Metrics live = live_eval(*vp.policy, target, a.eval_episodes, mix_seed(a.seed, "live"));

  Json out;
  out["command"] = "transfer";
  out["variant"] = vp.name;
  out["source"] = source.name();
  out["target"] = target.name();
  out["target_dialogues"] = in.target_logs.size();
  out["live"] = metrics_to_json(live);
  out["final_loss"] = vp.loss_trace.empty() ? Json() : Json(vp.loss_trace.back());
  if (vp.maps && !a.out_path.empty()) {
    save_mapping_snapshot(a.out_path, make_mapping_snapshot(vp.name, target, source, *vp.maps,
                                                            vp.loss_trace));
    std::cerr << "saved mapping snapshot to " << a.out_path << "\n";
    out["mapping"] = a.out_path;
  } else {
    if (!a.out_path.empty())
      std::cerr << "variant " << vp.name << " has no mapping to save\n";
    out["mapping"] = Json();
  }
  emit(out);
  return 0;
}

struct ExperimentArgs {
  std::string config_path;
  std::string out_csv;  // overrides the config's out_csv
  int jobs = 1;
};

int cmd_experiment(const ExperimentArgs& a) {
  const Json cfg_json = check_config_file(a.config_path);
  const auto need = [&](const char* key) -> const Json& {
    const auto it = cfg_json.find(key);
    if (it == cfg_json.end())
      throw ConfigError(a.config_path + ": missing key '" + key + "'");
    return *it;
  };
  const Ontology source = load_ontology(need("source_ontology").get<std::string>());
  const Ontology target = load_ontology(need("target_ontology").get<std::string>());
  std::optional<AliasTable> alias;
  if (cfg_json.contains("alias") && !cfg_json.at("alias").is_null())
    alias = load_alias(cfg_json.at("alias").get<std::string>());

  CurveConfig cfg;
  cfg.variants.clear();
  for (const auto& v : need("variants")) cfg.variants.push_back(parse_variant(v.get<std::string>()));
  cfg.sizes = need("sizes").get<std::vector<int>>();
  cfg.seeds = need("seeds").get<std::vector<std::uint64_t>>();
  maybe_set(cfg_json, "source_episodes", cfg.source_episodes);
  maybe_set(cfg_json, "eval_episodes", cfg.eval_episodes);
  maybe_set(cfg_json, "expert_episodes", cfg.expert_episodes);
  maybe_set(cfg_json, "auc_samples", cfg.auc_samples);
  if (cfg_json.contains("transfer")) cfg.transfer = transfer_from_json(cfg_json.at("transfer"), cfg.transfer);
  if (cfg_json.contains("gp")) cfg.target_gp = gp_overlay_from_json(cfg_json.at("gp"), cfg.target_gp);
  if (cfg_json.contains("collect")) cfg.collect = collect_from_json(cfg_json.at("collect"), cfg.collect);

  std::string out_csv = a.out_csv;
  if (out_csv.empty()) maybe_set(cfg_json, "out_csv", out_csv);
  if (out_csv.empty()) throw ConfigError("experiment needs an output CSV (--out or out_csv)");

  const auto progress = [](const CurveRow& row) {
    std::cerr << "row " << row.variant << " size " << row.size << " seed " << row.seed
              << ": reward " << row.metrics.avg_reward << ", auc " << row.auc << "\n";
  };
  const auto rows = learning_curve(target, source, alias, cfg, out_csv, a.jobs, progress);

  Json out;
  out["command"] = "experiment";
  out["rows"] = rows.size();
  out["csv"] = out_csv;
  out["heatmaps"] = Json::array();

  std::string heatmap_prefix;
  maybe_set(cfg_json, "heatmap_prefix", heatmap_prefix);
  if (!heatmap_prefix.empty()) {
    // One representative cell per variant: largest size, first seed.
    const int size = *std::max_element(cfg.sizes.begin(), cfg.sizes.end());
    const std::uint64_t seed = cfg.seeds.front();
    const SeedArtifacts art = make_seed_artifacts(target, source, cfg, seed);
    for (std::size_t vi = 0; vi < cfg.variants.size(); ++vi) {
      if (cfg.variants[vi] == Variant::NoneTL) continue;
      std::cerr << "rendering heatmaps for " << variant_name(cfg.variants[vi]) << "\n";
      VariantInputs in;
      in.source_q = art.source_q;
      in.source = &source;
      in.target = &target;
      in.source_logs = art.source_logs;
      in.target_logs.assign(art.target_pool.begin(), art.target_pool.begin() + size);
      in.alias = alias;
      in.cfg = cfg.transfer;
      in.cfg.seed = mix_seed(seed, "cell", vi, size);
      in.gp = cfg.target_gp;
      const VariantPolicy vp = build_variant(cfg.variants[vi], in);
      if (!vp.maps) continue;
      std::vector<std::string> target_slots, source_slots;
      for (int s = 0; s < target.n_slots(); ++s) target_slots.push_back(target.slot_name(s));
      for (int s = 0; s < source.n_slots(); ++s) source_slots.push_back(source.slot_name(s));
      const std::string base = heatmap_prefix + "_" + vp.name;
      export_mapping(vp.maps->act_t2s, target.acts(), source.acts(), base + "_acts.csv",
                     base + "_acts.svg");
      export_mapping(vp.maps->slot_t2s, target_slots, source_slots, base + "_slots.csv",
                     base + "_slots.svg");
      for (const char* suffix : {"_acts.csv", "_acts.svg", "_slots.csv", "_slots.svg"})
        out["heatmaps"].push_back(base + suffix);
    }
  }

  out["summary"] = Json::array();
  for (const auto& s : aggregate_curve(rows)) {
    Json row;
    row["variant"] = s.variant;
    row["size"] = s.size;
    row["n"] = s.n;
    row["mean_reward"] = s.mean_reward;
    row["stderr_reward"] = s.stderr_reward;
    row["mean_success"] = s.mean_success;
    row["stderr_success"] = s.stderr_success;
    row["mean_length"] = s.mean_length;
    row["stderr_length"] = s.stderr_length;
    row["mean_auc"] = s.mean_auc;
    row["stderr_auc"] = s.stderr_auc;
    out["summary"].push_back(std::move(row));
  }
  emit(out);
  return 0;
}

struct EvalArgs {
  std::string snapshot_path;
  std::string source_ontology_path;
  std::string mapping_path;
  std::string target_ontology_path;
  int episodes = 300;
  int expert_episodes = 20;
  int auc_samples = 10;
  std::uint64_t seed = 0;
};

int cmd_eval(const EvalArgs& a) {
  const Ontology source = load_ontology(a.source_ontology_path);
  const SourceSnapshot snap = load_source_snapshot(a.snapshot_path);
  if (snap.ontology != source.name())
    throw ConfigError("snapshot was trained on '" + snap.ontology +
                      "' but the source ontology is '" + source.name() + "'");

  std::optional<Ontology> target;
  std::unique_ptr<ValuePolicy> policy;
  if (!a.mapping_path.empty()) {
    if (a.target_ontology_path.empty())
      throw ConfigError("--mapping needs --target-ontology");
    target = load_ontology(a.target_ontology_path);
    const MappingSnapshot mapping = load_mapping_snapshot(a.mapping_path);
    if (mapping.source != source.name() || mapping.target != target->name())
      throw ConfigError("mapping snapshot pairs '" + mapping.target + "' with '" +
                        mapping.source + "', not the given ontologies");
    policy = std::make_unique<TransferredPolicy>(snap.model, mapping.maps, *target, source);
  } else {
    policy = std::make_unique<GpPolicy>(snap.model);
  }
  const Ontology& domain = target ? *target : source;

  std::cerr << "evaluating on " << domain.name() << " (" << a.episodes << " live episodes)\n";
  const Metrics live = live_eval(*policy, domain, a.episodes, mix_seed(a.seed, "live"));
  OraclePolicy oracle(domain);
  std::vector<EpisodeLog> expert;
  expert.reserve(a.expert_episodes);
  for (int i = 0; i < a.expert_episodes; ++i)
    expert.push_back(run_episode(oracle, domain, mix_seed(a.seed, "expert", i)));
  const double auc = static_auc_eval(*policy, expert, domain, a.auc_samples,
                                     mix_seed(a.seed, "rank"));

  Json out;
  out["command"] = "eval";
  out["domain"] = domain.name();
  out["live"] = metrics_to_json(live);
  out["auc"] = auc;
  emit(out);
  return 0;
}

struct ExportMappingArgs {
  std::string mapping_path;
  std::string out_prefix;
};

int cmd_export_mapping(const ExportMappingArgs& a) {
  const MappingSnapshot snap = load_mapping_snapshot(a.mapping_path);
  Json out;
  out["command"] = "export-mapping";
  out["variant"] = snap.variant;
  out["files"] = Json::array();
  export_mapping(snap.maps.act_t2s, snap.target_acts, snap.source_acts,
                 a.out_prefix + "_acts.csv", a.out_prefix + "_acts.svg");
  export_mapping(snap.maps.slot_t2s, snap.target_slots, snap.source_slots,
                 a.out_prefix + "_slots.csv", a.out_prefix + "_slots.svg");
  for (const char* suffix : {"_acts.csv", "_acts.svg", "_slots.csv", "_slots.svg"})
    out["files"].push_back(a.out_prefix + suffix);
  emit(out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-domain dialogue policy transfer toolkit"};
  app.require_subcommand(1);

  TrainSourceArgs train_args;
  CLI::App* train = app.add_subcommand("train-source", "Train a source GP policy and snapshot it");
  train->add_option("--ontology", train_args.ontology_path, "Ontology JSON path")->required();
  train->add_option("--episodes", train_args.episodes, "Training dialogues");
  train->add_option("--seed", train_args.seed, "Base seed");
  train->add_option("--out", train_args.out_path, "Snapshot output path")->required();
  train->add_option("--refit-every", train_args.train.refit_every, "Episodes between GP refits");
  train->add_option("--eps-start", train_args.train.eps_start, "Initial exploration rate");
  train->add_option("--eps-end", train_args.train.eps_end, "Final exploration rate");

  TransferArgs transfer_args;
  CLI::App* transfer = app.add_subcommand("transfer", "Build a transferred policy for a target domain");
  transfer->add_option("--source-snapshot", transfer_args.snapshot_path, "Trained source snapshot")
      ->required();
  transfer->add_option("--source-ontology", transfer_args.source_ontology_path,
                       "Source ontology JSON")->required();
  transfer->add_option("--target-ontology", transfer_args.target_ontology_path,
                       "Target ontology JSON")->required();
  auto* opt_logs = transfer->add_option("--target-logs", transfer_args.target_logs_path,
                                        "Target dialogues (JSONL)");
  auto* opt_collect = transfer->add_option("--collect", transfer_args.collect,
                                           "Collect N target dialogues instead");
  opt_logs->excludes(opt_collect);
  transfer->add_option("--variant", transfer_args.variant,
                       "promise|nonetl|rafs|lafs|fafs|fals");
  transfer->add_option("--alias", transfer_args.alias_path, "Ground-truth alias JSON");
  transfer->add_option("--config", transfer_args.config_path, "Transfer config JSON");
  transfer->add_option("--out", transfer_args.out_path, "Mapping snapshot output path");
  transfer->add_option("--eval-episodes", transfer_args.eval_episodes, "Live evaluation dialogues");
  auto* opt_seed = transfer->add_option("--seed", transfer_args.seed, "Base seed");

  ExperimentArgs experiment_args;
  CLI::App* experiment = app.add_subcommand("experiment", "Run a learning-curve experiment");
  experiment->add_option("--config", experiment_args.config_path, "Experiment config JSON")
      ->required();
  experiment->add_option("--out", experiment_args.out_csv, "Curve CSV path (overrides config)");
  experiment->add_option("--jobs", experiment_args.jobs, "Cells trained in parallel");

  EvalArgs eval_args;
  CLI::App* eval = app.add_subcommand("eval", "Evaluate a snapshot, optionally through a mapping");
  eval->add_option("--source-snapshot", eval_args.snapshot_path, "Trained source snapshot")
      ->required();
  eval->add_option("--source-ontology", eval_args.source_ontology_path, "Source ontology JSON")
      ->required();
  eval->add_option("--mapping", eval_args.mapping_path, "Mapping snapshot JSON");
  eval->add_option("--target-ontology", eval_args.target_ontology_path, "Target ontology JSON");
  eval->add_option("--episodes", eval_args.episodes, "Live evaluation dialogues");
  eval->add_option("--expert-episodes", eval_args.expert_episodes, "Oracle dialogues for the AUC");
  eval->add_option("--auc-samples", eval_args.auc_samples, "Posterior samples per turn");
  eval->add_option("--seed", eval_args.seed, "Base seed");

  ExportMappingArgs export_args;
  CLI::App* exporter = app.add_subcommand("export-mapping", "Render a mapping snapshot to CSV + SVG");
  exporter->add_option("--mapping", export_args.mapping_path, "Mapping snapshot JSON")->required();
  exporter->add_option("--out-prefix", export_args.out_prefix, "Output path prefix")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    transfer_args.seed_given = opt_seed->count() > 0;
    if (train->parsed()) return cmd_train_source(train_args);
    if (transfer->parsed()) return cmd_transfer(transfer_args);
    if (experiment->parsed()) return cmd_experiment(experiment_args);
    if (eval->parsed()) return cmd_eval(eval_args);
    if (exporter->parsed()) return cmd_export_mapping(export_args);
    std::cerr << "no subcommand given\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
