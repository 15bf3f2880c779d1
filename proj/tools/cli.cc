// Copyright 2026 The RewardForge Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "cli.h"

#include <pthread.h>
#include <signal.h>

#include <algorithm>
#include <filesystem>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "json.hpp"
#include "reward_forge/checkpoint.h"
#include "reward_forge/data.h"
#include "reward_forge/ensemble.h"
#include "reward_forge/error.h"
#include "reward_forge/metrics.h"
#include "reward_forge/service.h"
#include "reward_forge/synthetic.h"
#include "reward_forge/trainer.h"

namespace reward_forge {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr char kStoreFile[] = "embeddings.bin";
constexpr char kManifestFile[] = "manifest.jsonl";

// A data argument is either a directory holding embeddings.bin and
// manifest.jsonl, or a manifest path with embeddings.bin beside it.
PreferenceSet LoadData(const fs::path& data) {
  fs::path manifest = data;
  fs::path store_path;
  if (fs::is_directory(data)) {
    manifest = data / kManifestFile;
    store_path = data / kStoreFile;
  } else {
    store_path = data.parent_path() / kStoreFile;
  }
  PreferenceSet set;
  set.store = std::make_shared<const EmbeddingStore>(LoadEmbeddings(store_path));
  set.records = LoadManifest(manifest, *set.store);
  return set;
}

std::vector<double> ParseLearningRates(const std::string& text) {
  std::vector<double> rates;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      rates.push_back(std::stod(item, &used));
      Require(used == item.size(), ErrorCode::kInvalidArgument, "");
    } catch (const std::exception&) {
      Fail(ErrorCode::kInvalidArgument, "--lr-grid: cannot parse '" + item + "'");
    }
  }
  Require(!rates.empty(), ErrorCode::kInvalidArgument, "--lr-grid is empty");
  return rates;
}

std::vector<std::string> SplitCommas(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, ',');) {
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

std::size_t DefaultValidationSize(std::size_t n) { return std::max<std::size_t>(1, n / 10); }

DatasetMix ParseMix(const json& j) {
  DatasetMix mix;
  for (const json& e : j) {
    MixEntry entry;
    entry.dataset_name = e.at("dataset_name").get<std::string>();
    entry.included = e.value("included", true);
    entry.weight = e.value("weight", 1.0);
    mix.entries.push_back(std::move(entry));
  }
  return mix;
}

// Members loaded without a store read the --data store.
void AttachStore(std::vector<EnsembleMember>& members,
                 const std::shared_ptr<const EmbeddingStore>& store) {
  for (EnsembleMember& m : members) {
    if (!m.store) m.store = store;
  }
}

fs::path Sibling(const fs::path& out, std::string_view suffix) {
  return fs::path(out.string() + std::string(suffix));
}

// --- train -----------------------------------------------------------------

struct TrainArgs {
  std::string config;
  std::string data;
  std::string out;
  std::string lr_grid;
  std::optional<double> lr;
  std::optional<double> lambda;
  bool length_norm = false;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> val_pairs;
  std::string execution;
};

int RunTrain(const TrainArgs& args, bool length_norm_given, std::ostream& out) {
  const json run = args.config.empty() ? json::object() : ReadJsonFile(args.config);
  TrainConfig cfg = TrainConfigFromJson(run);
  if (args.lr) cfg.learning_rate = *args.lr;
  if (args.lambda) cfg.lambda_zero_coeff = *args.lambda;
  if (length_norm_given) cfg.length_normalization = args.length_norm;
  if (args.seed) cfg.shuffle_seed = *args.seed;
  if (!args.execution.empty()) cfg.execution = ParseExecutionMode(args.execution);
  ValidateTrainConfig(cfg);

  PreferenceSet data = LoadData(args.data);
  json head_json = run.value("head", json::object());
  if (!head_json.contains("input_dim")) head_json["input_dim"] = data.store->dim();
  if (args.seed) head_json["seed"] = *args.seed;
  const HeadConfig head = HeadConfigFromJson(head_json);
  Require(head.input_dim == data.store->dim(), ErrorCode::kDimMismatch,
          fmt::format("head input_dim {} != store dim {}", head.input_dim, data.store->dim()));

  const std::uint64_t split_seed = run.value("split_seed", cfg.shuffle_seed);
  const std::size_t n_val = args.val_pairs.value_or(
      run.value("validation_pairs", DefaultValidationSize(data.records.size())));
  ValidationSplit split = SplitValidation(data.records, n_val, split_seed);
  if (auto it = run.find("mix"); it != run.end()) {
    split.train = MixDatasets(split.train, ParseMix(*it), split_seed);
  }
  const PreferenceSet train_set{data.store, std::move(split.train)};
  const PreferenceSet val_set{data.store, std::move(split.validation)};

  std::vector<double> grid;
  if (!args.lr_grid.empty()) {
    grid = ParseLearningRates(args.lr_grid);
  } else if (auto it = run.find("lr_grid"); it != run.end()) {
    grid = it->get<std::vector<double>>();
  }

  TrainResult result;
  json report;
  if (!grid.empty()) {
    GridSearchResult search = GridSearchLearningRate(train_set, val_set, head, cfg, grid);
    json cells = json::array();
    for (const GridCell& cell : search.cells) {
      json c{{"learning_rate", cell.learning_rate}};
      if (cell.result) c["final_validation_accuracy"] = cell.result->report.final_validation_accuracy;
      if (cell.error) c["error"] = *cell.error;
      cells.push_back(std::move(c));
    }
    result = std::move(*search.cells[search.best_index].result);
    cfg.learning_rate = search.best_learning_rate;
    report = TrainReportToJson(result.report);
    report["grid"] = std::move(cells);
    report["best_learning_rate"] = search.best_learning_rate;
  } else {
    result = Train(train_set, val_set, head, cfg);
    report = TrainReportToJson(result.report);
  }
  report["train_config"] = TrainConfigToJson(cfg);
  report["n_train"] = train_set.records.size();
  report["n_validation"] = val_set.records.size();
  report["validation"] = EvalReportToJson(
      EvalModel(result.params, val_set.records, *data.store, cfg.length_normalization));

  const fs::path out_path(args.out);
  SaveCheckpoint(out_path, Checkpoint{result.params, cfg.length_normalization});
  WriteTextFile(Sibling(out_path, ".report.json"), report.dump(2) + "\n");
  WriteTextFile(Sibling(out_path, ".loss.csv"), LossCurveCsv(result.report));
  out << report.dump(2) << "\n";
  return kExitOk;
}

// --- eval ------------------------------------------------------------------

int RunEval(const std::string& ckpt_path, const std::string& data_path,
            std::optional<bool> length_norm, bool table, const std::string& execution,
            std::ostream& out) {
  const Checkpoint ckpt = LoadCheckpoint(ckpt_path);
  const PreferenceSet data = LoadData(data_path);
  const ExecutionMode mode =
      execution.empty() ? ExecutionMode::kSerial : ParseExecutionMode(execution);
  const EvalReport report =
      EvalModel(ckpt.params, data.records, *data.store,
                length_norm.value_or(ckpt.length_normalization), mode);
  if (table) {
    out << EvalReportToTable(report);
  } else {
    out << EvalReportToJson(report).dump(2) << "\n";
  }
  return kExitOk;
}

// --- ensemble --------------------------------------------------------------

int RunEnsemble(const std::string& manifest_path, const std::string& data_path,
                const std::string& strategy, std::optional<std::size_t> val_pairs,
                std::uint64_t seed, std::ostream& out) {
  EnsembleManifest manifest = LoadEnsembleManifest(manifest_path);
  if (!strategy.empty()) {
    manifest.config.strategy = ParseStrategy(strategy);
    manifest.config.weights.reset();
  }
  const PreferenceSet data = LoadData(data_path);
  AttachStore(manifest.members, data.store);

  const bool needs_fit =
      manifest.standardize || (manifest.config.strategy != EnsembleStrategy::kAverage &&
                               !manifest.config.weights.has_value());
  std::vector<PreferenceRecord> eval_records = data.records;
  std::vector<PreferenceRecord> validation;
  if (needs_fit || val_pairs) {
    ValidationSplit split = SplitValidation(
        data.records, val_pairs.value_or(DefaultValidationSize(data.records.size())), seed);
    eval_records = std::move(split.train);
    validation = std::move(split.validation);
  }
  std::vector<EnsembleMember> members = manifest.members;
  if (manifest.standardize) members = FitStandardization(members, validation);
  const EnsembleConfig config = ResolveWeights(members, manifest.config, validation);

  json per_member = json::object();
  for (const EnsembleMember& m : members) {
    per_member[m.member_id] = EvalReportToJson(BuildReport(MemberScoredPairs(m, eval_records)));
  }
  json result{{"strategy", std::string(StrategyName(config.strategy))},
              {"standardize", manifest.standardize},
              {"n_validation", validation.size()},
              {"n_eval", eval_records.size()},
              {"members", per_member},
              {"ensemble", EvalReportToJson(EvalEnsemble(members, config, eval_records))}};
  if (config.weights) result["weights"] = *config.weights;
  out << result.dump(2) << "\n";
  return kExitOk;
}

// --- score -----------------------------------------------------------------

int RunScore(const std::vector<std::string>& ckpts, const std::string& manifest,
             const std::string& data_path, std::ostream& out) {
  ServeConfig serve;
  serve.checkpoint_paths = ckpts;
  if (!manifest.empty()) serve.ensemble_manifest = manifest;
  ServedModels models = LoadServedModels(serve);
  const PreferenceSet data = LoadData(data_path);
  AttachStore(models.members, data.store);
  const auto pairs = EnsembleScoredPairs(models.members, models.config, data.records);
  for (const ScoredPair& p : pairs) {
    out << json{{"id", p.record_id},
                {"reward_chosen", p.reward_chosen},
                {"reward_rejected", p.reward_rejected},
                {"correct", PairCorrect(p)}}
               .dump()
        << "\n";
  }
  return kExitOk;
}

// --- serve -----------------------------------------------------------------

int RunServe(const ServeConfig& config, std::ostream& out) {
  auto models = std::make_shared<const ServedModels>(LoadServedModels(config));
  // Block the shutdown signals before any thread starts so only sigwait sees them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);
  ScoringServer server(models, config);
  server.Start();
  out << json{{"listening", server.port()}}.dump() << std::endl;
  int received = 0;
  sigwait(&signals, &received);
  spdlog::info("signal {} received, draining connections", received);
  server.Stop();
  return kExitOk;
}

// --- gen-synthetic ---------------------------------------------------------

int RunGenSynthetic(SyntheticSpec spec, const std::string& config,
                    const std::string& categories, const std::string& out_dir,
                    std::ostream& out) {
  if (!config.empty()) spec = SyntheticSpecFromJson(ReadJsonFile(config));
  if (!categories.empty()) spec.category_labels = SplitCommas(categories);
  ValidateSyntheticSpec(spec);
  const SyntheticData data = GenerateSynthetic(spec);
  WriteSyntheticDirectory(out_dir, data);
  out << json{{"out", out_dir},
              {"pairs", data.records.size()},
              {"dim", data.store.dim()},
              {"bayes_accuracy", BayesAccuracy(data.oracle, data.store, data.records)}}
             .dump(2)
      << "\n";
  return kExitOk;
}

}  // namespace

int RunCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Train, evaluate, ensemble and serve reward heads over frozen embeddings.",
               "reward-forge"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "reward-forge 1.0");

  // train
  TrainArgs train;
  CLI::App* train_cmd = app.add_subcommand("train", "Train a reward head");
  train_cmd->add_option("--config", train.config, "Run config JSON");
  train_cmd->add_option("--data", train.data, "Data directory or manifest")->required();
  train_cmd->add_option("--out", train.out, "Checkpoint path to write")->required();
  train_cmd->add_option("--lr", train.lr, "Learning rate");
  train_cmd->add_option("--lr-grid", train.lr_grid, "Comma-separated learning rates to search");
  train_cmd->add_option("--lambda", train.lambda, "Zero-coefficient penalty weight");
  CLI::Option* train_ln = train_cmd->add_flag("--length-norm,!--no-length-norm",
                                              train.length_norm, "Length-normalize rewards");
  train_cmd->add_option("--seed", train.seed, "Seed for init, shuffling and the split");
  train_cmd->add_option("--val-pairs", train.val_pairs, "Validation pairs held out");
  train_cmd->add_option("--execution", train.execution, "serial or parallel")
      ->check(CLI::IsMember({"serial", "parallel"}));

  // eval
  std::string eval_ckpt, eval_data, eval_execution;
  bool eval_ln = false;
  bool eval_table = false;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  eval_cmd->add_option("--ckpt", eval_ckpt, "Checkpoint JSON")->required();
  eval_cmd->add_option("--data", eval_data, "Data directory or manifest")->required();
  CLI::Option* eval_ln_opt = eval_cmd->add_flag(
      "--length-norm,!--no-length-norm", eval_ln, "Override the checkpoint's length normalization");
  eval_cmd->add_flag("--table", eval_table, "Print a table instead of JSON");
  eval_cmd->add_option("--execution", eval_execution, "serial or parallel")
      ->check(CLI::IsMember({"serial", "parallel"}));

  // ensemble
  std::string ens_config, ens_data, ens_strategy;
  std::optional<std::size_t> ens_val;
  std::uint64_t ens_seed = 0;
  CLI::App* ens_cmd = app.add_subcommand("ensemble", "Evaluate an ensemble of heads");
  ens_cmd->add_option("--config", ens_config, "Ensemble manifest JSON")->required();
  ens_cmd->add_option("--data", ens_data, "Data directory or manifest")->required();
  ens_cmd->add_option("--strategy", ens_strategy, "average, accuracy or confidence");
  ens_cmd->add_option("--val-pairs", ens_val, "Validation pairs used to fit weights");
  ens_cmd->add_option("--seed", ens_seed, "Validation split seed");

  // score
  std::vector<std::string> score_ckpts;
  std::string score_config, score_data;
  CLI::App* score_cmd = app.add_subcommand("score", "Score every pair of a dataset");
  score_cmd->add_option("--ckpt", score_ckpts, "Checkpoint JSON (repeatable)");
  score_cmd->add_option("--config", score_config, "Ensemble manifest JSON");
  score_cmd->add_option("--data", score_data, "Data directory or manifest")->required();

  // serve
  ServeConfig serve;
  std::string serve_manifest;
  CLI::App* serve_cmd = app.add_subcommand("serve", "Serve rewards over NDJSON/TCP");
  serve_cmd->add_option("--ckpt", serve.checkpoint_paths, "Checkpoint JSON (repeatable)");
  serve_cmd->add_option("--config", serve_manifest, "Ensemble manifest JSON");
  serve_cmd->add_option("--bind", serve.bind_address, "host:port")->capture_default_str();
  serve_cmd->add_option("--max-connections", serve.max_concurrent_connections)
      ->capture_default_str();
  serve_cmd->add_option("--request-limit", serve.request_size_limit, "Max request bytes")
      ->capture_default_str();

  // gen-synthetic
  SyntheticSpec spec;
  std::string syn_config, syn_categories, syn_out;
  CLI::App* syn_cmd = app.add_subcommand("gen-synthetic", "Write a synthetic preference set");
  syn_cmd->add_option("--config", syn_config, "Synthetic spec JSON");
  syn_cmd->add_option("--dim", spec.dim)->capture_default_str();
  syn_cmd->add_option("--pairs", spec.n_pairs)->capture_default_str();
  syn_cmd->add_option("--seed", spec.seed)->capture_default_str();
  syn_cmd->add_option("--temperature", spec.noise_temperature)->capture_default_str();
  syn_cmd->add_option("--min-length", spec.min_length)->capture_default_str();
  syn_cmd->add_option("--max-length", spec.max_length)->capture_default_str();
  syn_cmd->add_option("--categories", syn_categories, "Comma-separated category labels");
  syn_cmd->add_option("--out", syn_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train_cmd) return RunTrain(train, train_ln->count() > 0, out);
    if (*eval_cmd) {
      return RunEval(eval_ckpt, eval_data,
                     eval_ln_opt->count() > 0 ? std::optional<bool>(eval_ln) : std::nullopt,
                     eval_table, eval_execution, out);
    }
    if (*ens_cmd) return RunEnsemble(ens_config, ens_data, ens_strategy, ens_val, ens_seed, out);
    if (*score_cmd) {
      if (score_ckpts.empty() && score_config.empty()) {
        err << "score: pass --ckpt or --config\n" << score_cmd->help();
        return kExitUsage;
      }
      return RunScore(score_ckpts, score_config, score_data, out);
    }
    if (*serve_cmd) {
      if (!serve_manifest.empty()) serve.ensemble_manifest = serve_manifest;
      if (serve.checkpoint_paths.empty() && !serve.ensemble_manifest) {
        err << "serve: pass --ckpt or --config\n" << serve_cmd->help();
        return kExitUsage;
      }
      return RunServe(serve, out);
    }
    if (*syn_cmd) return RunGenSynthetic(spec, syn_config, syn_categories, syn_out, out);
  } catch (const Error& e) {
    err << "error [" << ErrorCodeName(e.code()) << "]: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace reward_forge
