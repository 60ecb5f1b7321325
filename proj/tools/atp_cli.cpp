// Command-line front end: train the toy victim, run gradient and baseline
// attacks over a dataset, sweep attack hyperparameters, re-render results.

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "atp/config.hpp"
#include "atp/dataset.hpp"
#include "atp/experiment.hpp"
#include "atp/judge.hpp"
#include "atp/manifest.hpp"
#include "atp/report.hpp"
#include "atp/synthetic.hpp"
#include "atp/train.hpp"
#include "atp/version.hpp"
#include "atp/victim_io.hpp"

namespace {

using namespace atp;

std::vector<std::string> split_csv(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct DataOpts {
  std::string checkpoint;
  std::string dataset;
  std::string out;
  std::string keywords_csv;
  std::string metric = "containment";
  int workers = static_cast<int>(std::thread::hardware_concurrency());
  bool include_order_sensitive = false;
  bool resume = false;

  std::vector<std::string> keywords() const {
    return keywords_csv.empty() ? default_order_keywords() : split_csv(keywords_csv);
  }
};

void add_data_opts(CLI::App* cmd, DataOpts* o) {
  cmd->add_option("--checkpoint", o->checkpoint, "victim checkpoint file")->required();
  cmd->add_option("--dataset", o->dataset, "line-delimited dataset file")->required();
  cmd->add_option("--out", o->out, "results file (one record per line)")->required();
  cmd->add_option("--keywords", o->keywords_csv,
                  "comma-separated order-sensitivity keywords (overrides the default list)");
  cmd->add_option("--metric", o->metric, "containment|judge")
      ->check(CLI::IsMember({"containment", "judge"}));
  cmd->add_option("--workers", o->workers, "example-level parallelism (default: cores)");
  cmd->add_flag("--include-order-sensitive", o->include_order_sensitive,
                "keep order-sensitive examples (diagnostics)");
  cmd->add_flag("--resume", o->resume, "resume an interrupted run from its results file");
}

ScoreFn make_score_fn(const std::string& metric) {
  if (metric == "containment") return containment_score_fn();
  RemoteConfig cfg;
  if (const char* url = std::getenv("ATP_JUDGE_BASE_URL")) cfg.base_url = url;
  if (const char* model = std::getenv("ATP_JUDGE_MODEL")) cfg.model = model;
  if (cfg.base_url.empty())
    throw std::runtime_error("--metric judge requires ATP_JUDGE_BASE_URL (and ATP_API_KEY)");
  auto mutex = std::make_shared<std::mutex>();
  return [cfg, mutex](const TqaExample& ex, const std::string& response) {
    std::lock_guard<std::mutex> lock(*mutex);
    ChatClient client(cfg);
    return judge_score(client, {ex.question, ex.answer, response}).value;
  };
}

// Runs the experiment with manifest-first semantics and prints the summary.
// Returns the process exit status.
int run_and_report(const ToyVictim& victim, const DataOpts& data, std::vector<MethodSpec> methods,
                   const std::string& subcommand, nlohmann::json config, std::uint64_t seed) {
  RunManifest manifest;
  manifest.subcommand = subcommand;
  manifest.config = std::move(config);
  manifest.dataset_path = data.dataset;
  manifest.seed = seed;
  manifest.timestamp_utc = utc_timestamp();
  write_manifest(manifest, data.out + ".manifest.json");

  DatasetDiagnostics diag;
  const std::vector<TqaExample> examples = load_dataset(data.dataset, data.keywords(), &diag);
  for (const auto& bad : diag.malformed)
    std::cerr << "warning: " << data.dataset << ":" << bad.line_number << ": " << bad.message
              << "\n";

  ExperimentConfig cfg;
  cfg.seed = seed;
  cfg.workers = std::max(1, data.workers);
  cfg.include_order_sensitive = data.include_order_sensitive;

  std::vector<ExperimentRecord> resumed;
  std::size_t start_index = 0;
  if (data.resume) {
    try {
      resumed = load_results(data.out);
      start_index = resumed.size();
    } catch (const std::exception&) {
      // nothing to resume from
    }
  }
  JsonlResultSink sink(data.out, start_index);
  ExperimentReport report =
      run_experiment(victim, examples, methods, cfg, make_score_fn(data.metric), &sink,
                     resumed.empty() ? nullptr : &resumed);
  report.config_snapshot = manifest.config;

  std::ofstream summary(data.out + ".summary.json", std::ios::binary);
  summary << render_report(report, "json") << '\n';
  std::cout << render_report(report, "table");

  int failures = 0;
  for (const auto& r : report.records) failures += r.failed;
  if (failures > 0) {
    std::cerr << failures << " example(s) failed; see the results file for details\n";
    return 1;
  }
  return 0;
}

int cmd_train(const std::string& corpus_path, const std::string& out, TrainConfig train_cfg,
              int generate_n, std::uint64_t seed) {
  RunManifest manifest;
  manifest.subcommand = "train";
  manifest.config = {{"corpus", corpus_path},
                     {"max_epochs", train_cfg.max_epochs},
                     {"learning_rate", train_cfg.learning_rate},
                     {"target_ce", train_cfg.target_ce},
                     {"d", train_cfg.victim.d},
                     {"d_ff", train_cfg.victim.d_ff},
                     {"l_cell", train_cfg.victim.l_cell},
                     {"p_max", train_cfg.victim.p_max},
                     {"generate", generate_n}};
  manifest.dataset_path = corpus_path;
  manifest.seed = seed;
  manifest.timestamp_utc = utc_timestamp();
  write_manifest(manifest, out + ".manifest.json");

  if (generate_n > 0) {
    LookupCorpusConfig cc;
    cc.eval_examples = generate_n;
    cc.seed = seed;
    const LookupCorpus corpus = make_lookup_corpus(cc);
    save_dataset(corpus.train, corpus_path);
    save_dataset(corpus.eval, corpus_path + ".eval.jsonl");
    std::cout << "generated " << corpus.train.size() << " training examples to " << corpus_path
              << " and " << corpus.eval.size() << " eval examples to " << corpus_path
              << ".eval.jsonl\n";
  }

  const std::vector<TqaExample> corpus = load_dataset(corpus_path);
  Rng rng(seed);
  const TrainResult result = train_toy_victim(corpus, train_cfg, rng);
  save_victim(result.victim, out);
  std::cout << "trained " << result.epochs_run << " epoch(s), mean CE "
            << result.final_mean_ce << ", best " << result.best_mean_ce << "\n";
  if (!result.converged && train_cfg.max_epochs > 0)
    std::cerr << "warning: did not reach target CE " << train_cfg.target_ce
              << "; best checkpoint saved\n";
  std::cout << "checkpoint written to " << out << "\n";
  return 0;
}

struct SweepDimension {
  std::string key;
  std::vector<double> values;
};

SweepDimension parse_sweep(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos)
    throw CLI::ValidationError("--sweep", "expected key=v1,v2,... in '" + spec + "'");
  SweepDimension dim;
  dim.key = spec.substr(0, eq);
  static const std::vector<std::string> known = {"lambda", "lambda1", "lambda2", "n_attack"};
  if (std::find(known.begin(), known.end(), dim.key) == known.end())
    throw CLI::ValidationError("--sweep", "unknown key '" + dim.key +
                                              "' (expected lambda|lambda1|lambda2|n_attack)");
  for (const std::string& v : split_csv(spec.substr(eq + 1))) dim.values.push_back(std::stod(v));
  if (dim.values.empty()) throw CLI::ValidationError("--sweep", "empty grid in '" + spec + "'");
  return dim;
}

void apply_sweep_value(AtpConfig* cfg, const std::string& key, double value) {
  if (key == "lambda") {
    cfg->lambda1 = cfg->lambda2 = value;
  } else if (key == "lambda1") {
    cfg->lambda1 = value;
  } else if (key == "lambda2") {
    cfg->lambda2 = value;
  } else if (key == "n_attack") {
    cfg->n_attack = static_cast<int>(value);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adversarial table permutation toolkit"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "global random seed")->capture_default_str();

  // train ------------------------------------------------------------------
  auto* train = app.add_subcommand("train", "train and save a toy victim from a corpus file");
  std::string train_corpus, train_out;
  TrainConfig train_cfg;
  int generate_n = 0;
  train->add_option("--corpus", train_corpus, "corpus file (line-delimited records)")->required();
  train->add_option("--out", train_out, "checkpoint output path")->required();
  train->add_option("--epochs", train_cfg.max_epochs, "max training epochs")->capture_default_str();
  train->add_option("--lr", train_cfg.learning_rate, "Adam learning rate")->capture_default_str();
  train->add_option("--target-ce", train_cfg.target_ce, "stop once epoch mean CE drops below")
      ->capture_default_str();
  train->add_option("--d", train_cfg.victim.d, "model width")->capture_default_str();
  train->add_option("--dff", train_cfg.victim.d_ff, "feed-forward width")->capture_default_str();
  train->add_option("--lcell", train_cfg.victim.l_cell, "token slots per cell")->capture_default_str();
  train->add_option("--pmax", train_cfg.victim.p_max, "position table size")->capture_default_str();
  train->add_option("--generate", generate_n,
                    "synthesize a lookup corpus with this many eval examples first");

  // attack -----------------------------------------------------------------
  auto* attack = app.add_subcommand("attack", "run the gradient attack on a dataset");
  DataOpts attack_data;
  add_data_opts(attack, &attack_data);
  std::string attack_mode = "row-and-col", attack_objective = "ce", attack_config_path,
              attack_pos_mode = "serialized";
  AtpConfig atp_defaults;
  auto* mode_opt = attack->add_option("--mode", attack_mode, "row|col|row-and-col")
                       ->check(CLI::IsMember({"row", "col", "row-and-col"}));
  auto* objective_opt = attack->add_option("--objective", attack_objective, "ce|kl")
                            ->check(CLI::IsMember({"ce", "kl"}));
  auto* pos_opt = attack->add_option("--pos-mode", attack_pos_mode,
                                     "serialized|carry position ids after permutation")
                      ->check(CLI::IsMember({"serialized", "carry"}));
  attack->add_option("--config", attack_config_path, "attack config file (JSON, keys = field names)");
  auto* na_opt = attack->add_option("--n-attack", atp_defaults.n_attack, "attack iterations")
                     ->capture_default_str();
  auto* l1_opt = attack->add_option("--lambda1", atp_defaults.lambda1, "row entropy weight")
                     ->capture_default_str();
  auto* l2_opt = attack->add_option("--lambda2", atp_defaults.lambda2, "column entropy weight")
                     ->capture_default_str();
  auto* lr_opt = attack->add_option("--lr", atp_defaults.learning_rate, "Adam ascent rate")
                     ->capture_default_str();
  auto* ns_opt = attack->add_option("--n-sink", atp_defaults.n_sink, "Sinkhorn iterations")
                     ->capture_default_str();
  auto* ti_opt = attack->add_option("--theta-init-scale", atp_defaults.theta_init_scale,
                                    "stddev of the parameter initialization")
                     ->capture_default_str();

  // baseline ---------------------------------------------------------------
  auto* baseline = app.add_subcommand("baseline", "run a non-gradient attack on a dataset");
  DataOpts baseline_data;
  add_data_opts(baseline, &baseline_data);
  std::string baseline_method;
  int best_k = 20;
  EvoConfig evo_cfg;
  baseline->add_option("--method", baseline_method, "random|best-of-k|row-rvs|col-rvs|evo")
      ->required()
      ->check(CLI::IsMember({"random", "best-of-k", "row-rvs", "col-rvs", "evo"}));
  auto* k_opt = baseline->add_option("--k", best_k, "candidate count for best-of-k")
                    ->capture_default_str();
  auto* pop_opt = baseline->add_option("--population", evo_cfg.population_size)->capture_default_str();
  auto* gen_opt = baseline->add_option("--generations", evo_cfg.generations)->capture_default_str();
  auto* elite_opt = baseline->add_option("--elite", evo_cfg.elite_count)->capture_default_str();
  auto* cx_opt = baseline->add_option("--crossover-rate", evo_cfg.crossover_rate)->capture_default_str();
  auto* mut_opt = baseline->add_option("--mutation-rate", evo_cfg.mutation_rate)->capture_default_str();

  // ablate -----------------------------------------------------------------
  auto* ablate = app.add_subcommand("ablate", "sweep attack hyperparameters, one summary row each");
  DataOpts ablate_data;
  add_data_opts(ablate, &ablate_data);
  std::vector<std::string> sweep_specs;
  std::string ablate_mode = "row-and-col";
  int ablate_n_attack = 20;
  ablate->add_option("--sweep", sweep_specs,
                     "grid dimension key=v1,v2,... (lambda|lambda1|lambda2|n_attack); repeatable; "
                     "default sweeps lambda=0,0.1,1,10,20");
  ablate->add_option("--mode", ablate_mode, "row|col|row-and-col")
      ->check(CLI::IsMember({"row", "col", "row-and-col"}));
  ablate->add_option("--n-attack", ablate_n_attack, "attack iterations when not swept")
      ->capture_default_str();

  // report -----------------------------------------------------------------
  auto* report_cmd = app.add_subcommand("report", "re-render a persisted results file");
  std::string report_results, report_format = "table", report_out;
  report_cmd->add_option("--results", report_results, "results file to render")->required();
  report_cmd->add_option("--format", report_format, "table|csv|json")
      ->check(CLI::IsMember({"table", "csv", "json"}));
  report_cmd->add_option("--out", report_out, "write the rendering here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      train_cfg.seed = seed;
      return cmd_train(train_corpus, train_out, train_cfg, generate_n, seed);
    }

    if (attack->parsed()) {
      AtpConfig cfg;
      if (!attack_config_path.empty()) cfg = load_atp_config(attack_config_path);
      if (na_opt->count()) cfg.n_attack = atp_defaults.n_attack;
      if (l1_opt->count()) cfg.lambda1 = atp_defaults.lambda1;
      if (l2_opt->count()) cfg.lambda2 = atp_defaults.lambda2;
      if (lr_opt->count()) cfg.learning_rate = atp_defaults.learning_rate;
      if (ns_opt->count()) cfg.n_sink = atp_defaults.n_sink;
      if (ti_opt->count()) cfg.theta_init_scale = atp_defaults.theta_init_scale;
      if (mode_opt->count() || attack_config_path.empty()) cfg.mode = mode_from_string(attack_mode);
      if (objective_opt->count() || attack_config_path.empty())
        cfg.objective = objective_from_string(attack_objective);
      if (pos_opt->count() || attack_config_path.empty())
        cfg.pos_mode = position_mode_from_string(attack_pos_mode);
      cfg.validate();

      const ToyVictim victim = load_victim(attack_data.checkpoint);
      const std::string name = std::string("atp_") +
                               (cfg.objective == AttackObjective::kKlDivergence ? "kl_" : "") +
                               (cfg.mode == AttackMode::kJoint
                                    ? "joint"
                                    : (cfg.mode == AttackMode::kRowOnly ? "row" : "col"));
      nlohmann::json config = {{"checkpoint", attack_data.checkpoint},
                               {"metric", attack_data.metric},
                               {"workers", attack_data.workers},
                               {"include_order_sensitive", attack_data.include_order_sensitive},
                               {"attack", atp_config_to_json(cfg)},
                               {"victim_label", "toy-victim"}};
      return run_and_report(victim, attack_data, {MethodSpec::atp_attack(name, cfg)}, "attack",
                            std::move(config), seed);
    }

    if (baseline->parsed()) {
      if (baseline_method != "best-of-k" && k_opt->count() > 0)
        throw CLI::ValidationError("--k", "only valid with --method best-of-k");
      const bool evo_flags = pop_opt->count() || gen_opt->count() || elite_opt->count() ||
                             cx_opt->count() || mut_opt->count();
      if (baseline_method != "evo" && evo_flags)
        throw CLI::ValidationError("--population/--generations/--elite/--crossover-rate/"
                                   "--mutation-rate",
                                   "only valid with --method evo");
      MethodSpec method = MethodSpec::vanilla();
      if (baseline_method == "random") method = MethodSpec::random();
      if (baseline_method == "best-of-k") method = MethodSpec::best_of(best_k);
      if (baseline_method == "row-rvs") method = MethodSpec::row_reversal();
      if (baseline_method == "col-rvs") method = MethodSpec::col_reversal();
      if (baseline_method == "evo") {
        evo_cfg.validate();
        method = MethodSpec::evolutionary(evo_cfg);
      }
      const ToyVictim victim = load_victim(baseline_data.checkpoint);
      nlohmann::json config = {{"checkpoint", baseline_data.checkpoint},
                               {"method", baseline_method},
                               {"metric", baseline_data.metric},
                               {"workers", baseline_data.workers},
                               {"victim_label", "toy-victim"}};
      if (baseline_method == "best-of-k") config["k"] = best_k;
      if (baseline_method == "evo")
        config["evo"] = {{"population_size", evo_cfg.population_size},
                         {"generations", evo_cfg.generations},
                         {"elite_count", evo_cfg.elite_count},
                         {"crossover_rate", evo_cfg.crossover_rate},
                         {"mutation_rate", evo_cfg.mutation_rate},
                         {"query_budget", evo_cfg.population_size * (evo_cfg.generations + 1)}};
      return run_and_report(victim, baseline_data, {method}, "baseline", std::move(config), seed);
    }

    if (ablate->parsed()) {
      std::vector<SweepDimension> dims;
      for (const auto& s : sweep_specs) dims.push_back(parse_sweep(s));
      if (dims.empty()) dims.push_back({"lambda", {0.0, 0.1, 1.0, 10.0, 20.0}});

      const ToyVictim victim = load_victim(ablate_data.checkpoint);
      AtpConfig base;
      base.mode = mode_from_string(ablate_mode);
      base.n_attack = ablate_n_attack;

      std::vector<std::vector<double>> settings{{}};
      for (const auto& dim : dims) {
        std::vector<std::vector<double>> next;
        for (const auto& partial : settings)
          for (double v : dim.values) {
            auto s = partial;
            s.push_back(v);
            next.push_back(std::move(s));
          }
        settings = std::move(next);
      }

      nlohmann::json grid = nlohmann::json::object();
      for (const auto& dim : dims) grid[dim.key] = dim.values;
      RunManifest manifest;
      manifest.subcommand = "ablate";
      manifest.config = {{"checkpoint", ablate_data.checkpoint},
                         {"grid", grid},
                         {"base", atp_config_to_json(base)},
                         {"metric", ablate_data.metric}};
      manifest.dataset_path = ablate_data.dataset;
      manifest.seed = seed;
      manifest.timestamp_utc = utc_timestamp();
      write_manifest(manifest, ablate_data.out + ".manifest.json");

      const std::vector<TqaExample> examples =
          load_dataset(ablate_data.dataset, ablate_data.keywords());
      ExperimentConfig ecfg;
      ecfg.seed = seed;
      ecfg.workers = std::max(1, ablate_data.workers);
      ecfg.include_order_sensitive = ablate_data.include_order_sensitive;

      std::ofstream summary_csv(ablate_data.out + ".summary.csv", std::ios::binary);
      summary_csv << "setting,mean_clean_score,mean_attacked_score,mean_attacked_loss\n";
      std::cout << "setting\tclean\tattacked\tattacked_loss\n";
      int exit_code = 0;
      for (std::size_t s = 0; s < settings.size(); ++s) {
        AtpConfig cfg = base;
        std::string label;
        for (std::size_t d = 0; d < dims.size(); ++d) {
          apply_sweep_value(&cfg, dims[d].key, settings[s][d]);
          if (!label.empty()) label += "_";
          std::ostringstream v;
          v << dims[d].key << "=" << settings[s][d];
          label += v.str();
        }
        const std::string out_path = ablate_data.out + "." + label + ".jsonl";
        JsonlResultSink sink(out_path);
        const ExperimentReport report =
            run_experiment(victim, examples, {MethodSpec::atp_attack("atp_" + label, cfg)}, ecfg,
                           make_score_fn(ablate_data.metric), &sink);
        const auto aggs = report.aggregates();
        const MethodAggregate& a = aggs.at(0);
        summary_csv << label << ',' << a.mean_clean_score << ',' << a.mean_attacked_score << ','
                    << a.mean_attacked_loss << '\n';
        std::cout << label << '\t' << a.mean_clean_score << '\t' << a.mean_attacked_score << '\t'
                  << a.mean_attacked_loss << '\n';
        for (const auto& r : report.records) exit_code |= r.failed ? 1 : 0;
      }
      return exit_code;
    }

    if (report_cmd->parsed()) {
      ExperimentReport report;
      report.records = load_results(report_results);
      const std::string rendered = render_report(report, report_format);
      if (report_out.empty()) {
        std::cout << rendered;
      } else {
        std::ofstream out(report_out, std::ios::binary);
        if (!out) throw std::runtime_error("cannot open " + report_out);
        out << rendered;
      }
      return 0;
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
