/*
 * Copyright 2026 The procf Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "procf/cli.h"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>

#include <spdlog/cfg/helpers.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "procf/demo.h"
#include "procf/errors.h"
#include "procf/event_log.h"
#include "procf/pipeline.h"
#include "procf/predictor.h"
#include "procf/synthetic_log.h"

namespace procf {
namespace {

namespace fs = std::filesystem;

struct RunOptions {
  std::string log;
  std::string schema;
  std::string predictor_cmd;
  std::string oracle;
  std::string out = ".";
  GaConfig ga;
  TreeParams tree;
  std::size_t max_rules = 3;
  std::size_t counterfactual_samples = 20;
  std::uint64_t seed = 0;
  double predictor_timeout = 30.0;
};

void AddRunOptions(CLI::App* cmd, RunOptions& o) {
  cmd->add_option("--log", o.log, "Event log CSV")->required()->check(CLI::ExistingFile);
  cmd->add_option("--schema", o.schema, "Schema JSON")->required()->check(CLI::ExistingFile);
  auto* pc = cmd->add_option("--predictor-cmd", o.predictor_cmd,
                             "Shell command of an external predictor");
  auto* oc = cmd->add_option("--oracle", o.oracle, "Rule-oracle JSON used as black box")
                 ->check(CLI::ExistingFile);
  pc->excludes(oc);
  cmd->add_option("--population", o.ga.population, "GA population per class")
      ->capture_default_str();
  cmd->add_option("--generations", o.ga.generations, "GA generations")->capture_default_str();
  cmd->add_option("--p-c", o.ga.crossover_probability, "Crossover probability")
      ->capture_default_str();
  cmd->add_option("--p-m", o.ga.mutation_probability, "Per-gene mutation probability")
      ->capture_default_str();
  cmd->add_option("--sim-threshold", o.ga.similarity_threshold,
                  "Max edit distance for the initial pool")
      ->capture_default_str();
  cmd->add_option("--max-depth", o.tree.max_depth, "Surrogate depth bound, 0 = unlimited")
      ->capture_default_str();
  cmd->add_option("--min-samples-leaf", o.tree.min_samples_leaf, "Minimum rows per leaf")
      ->capture_default_str();
  cmd->add_option("--max-rules", o.max_rules, "Counterfactual rules to report")
      ->capture_default_str();
  cmd->add_option("--cf-samples", o.counterfactual_samples,
                  "Instances sampled per counterfactual rule")
      ->capture_default_str();
  cmd->add_option("--predictor-timeout", o.predictor_timeout,
                  "Seconds to wait for an external predictor reply")
      ->capture_default_str();
  cmd->add_option("--seed", o.seed, "Seed of every random stream")->capture_default_str();
  cmd->add_option("--out", o.out, "Output directory")->capture_default_str();
}

nlohmann::json ConfigJson(const RunOptions& o, const std::string& command) {
  nlohmann::json doc;
  doc["command"] = command;
  doc["log"] = o.log;
  doc["schema"] = o.schema;
  doc["predictor"] = o.oracle.empty() ? nlohmann::json{{"command", o.predictor_cmd}}
                                      : nlohmann::json{{"oracle", o.oracle}};
  nlohmann::json ga = o.ga.ToJson();
  ga.erase("seed");
  doc["ga"] = ga;
  doc["tree"] = o.tree.ToJson();
  doc["max_rules"] = o.max_rules;
  doc["counterfactual_samples"] = o.counterfactual_samples;
  doc["seed"] = o.seed;
  return doc;
}

// Loaded inputs shared by the run commands.
struct Session {
  std::unique_ptr<EventLog> log;
  std::shared_ptr<const FeatureLayout> layout;
  PredictorFactory factory;
  ExplainOptions explain;
};

Session OpenSession(const RunOptions& o, const std::string& command) {
  if (o.oracle.empty() && o.predictor_cmd.empty()) {
    throw InputError("one of --oracle or --predictor-cmd is required");
  }
  if (o.max_rules == 0) throw InputError("--max-rules must be positive");
  if (!(o.predictor_timeout > 0)) throw InputError("--predictor-timeout must be positive");
  o.ga.Validate();
  Session s;
  const LogSchema schema = LogSchema::Load(o.schema);
  s.log = std::make_unique<EventLog>(LoadLog(o.log, schema));
  s.layout = std::make_shared<FeatureLayout>(FeatureLayout::FromLog(*s.log));
  spdlog::info("loaded {} traces, {} feature columns", s.log->traces().size(),
               s.layout->size());
  if (!o.oracle.empty()) {
    auto oracle = std::make_shared<RuleOracle>(RuleOracle::Load(o.oracle));
    s.factory = [oracle] { return std::make_unique<RuleOracle>(*oracle); };
  } else {
    ExternalPredictor::Options options;
    options.timeout = std::chrono::milliseconds(
        static_cast<std::int64_t>(std::llround(o.predictor_timeout * 1000)));
    s.factory = [cmd = o.predictor_cmd, columns = s.layout->ColumnNames(), options] {
      return ExternalPredictor::Spawn(cmd, columns, options);
    };
  }
  s.explain.ga = o.ga;
  s.explain.tree = o.tree;
  s.explain.max_rules = o.max_rules;
  s.explain.counterfactual_samples = o.counterfactual_samples;
  s.explain.seed = o.seed;
  s.explain.config = ConfigJson(o, command);
  return s;
}

fs::path PrepareOut(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw InputError("cannot create output directory '" + dir + "'");
  }
  return fs::path(dir);
}

void WriteFile(const fs::path& path, const std::string& content) {
  std::ofstream file(path, std::ios::binary);
  file << content;
  if (!file) throw InputError("cannot write '" + path.string() + "'");
}

void WriteJson(const fs::path& path, const nlohmann::json& doc) {
  WriteFile(path, doc.dump(2) + "\n");
}

std::string Fixed(double value, int digits = 4) {
  if (std::isnan(value)) return "";
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.*f", digits, value);
  return buffer;
}

int CmdExplain(const RunOptions& o, const std::string& case_id, std::size_t k,
               std::ostream& out) {
  Session s = OpenSession(o, "explain");
  s.explain.config["case"] = case_id;
  s.explain.config["prefix_len"] = k;
  const fs::path dir = PrepareOut(o.out);
  std::unique_ptr<Predictor> predictor = s.factory();
  ExplainResult r = ExplainPrefix(*s.log, s.layout, *predictor, case_id, k, s.explain);
  nlohmann::json tree = r.tree->ToJson();
  tree["config"] = r.explanation.config;
  tree["seed"] = o.seed;
  WriteJson(dir / "explanation.json", r.explanation.ToJson());
  WriteJson(dir / "tree.json", tree);

  const Explanation& e = r.explanation;
  out << "case " << e.case_id << ", prefix length " << e.prefix_length << "\n";
  out << "black-box prediction: " << e.prediction << "\n";
  out << "factual: " << e.factual.ToString() << "\n";
  if (e.counterfactuals.empty()) {
    out << "counterfactuals: none (every leaf predicts " << e.factual.outcome << ")\n";
  } else {
    out << "counterfactuals:\n";
    for (std::size_t i = 0; i < e.counterfactuals.size(); ++i) {
      const Rule& rule = e.counterfactuals[i];
      out << "  " << i + 1 << ". " << rule.ToString() << "  [changes:";
      for (std::size_t v : rule.violated) out << " " << rule.conditions[v].ToString() << ";";
      out << " support " << rule.support << "]\n";
    }
  }
  out << "fidelity: " << Fixed(e.fidelity.fidelity) << " on " << e.fidelity.test_size
      << " held-out neighbors\n";
  out << "wrote " << (dir / "explanation.json").string() << " and "
      << (dir / "tree.json").string() << "\n";
  return kExitOk;
}

EvaluateOptions MakeEvaluateOptions(Session& s, const std::vector<std::size_t>& lengths,
                                    std::size_t max_prefixes, int jobs) {
  if (lengths.empty()) throw InputError("--prefix-lens needs at least one length");
  if (jobs < 1) throw InputError("--jobs must be positive");
  EvaluateOptions options;
  options.explain = s.explain;
  options.prefix_lengths = lengths;
  options.max_prefixes = max_prefixes;
  options.jobs = jobs;
  s.explain.config["prefix_lens"] = lengths;
  s.explain.config["max_prefixes"] = max_prefixes;
  options.explain.config = s.explain.config;
  return options;
}

int CmdEvaluate(const RunOptions& o, const std::vector<std::size_t>& lengths,
                std::size_t max_prefixes, int jobs, std::ostream& out) {
  Session s = OpenSession(o, "evaluate");
  EvaluateOptions options = MakeEvaluateOptions(s, lengths, max_prefixes, jobs);
  const fs::path dir = PrepareOut(o.out);
  const EvaluationResult r = EvaluatePrefixes(*s.log, s.layout, s.factory, options);

  std::string csv = "prefix_length,n_prefixes,mean_fidelity\n";
  for (const auto& row : r.rows) {
    csv += std::to_string(row.prefix_length) + "," + std::to_string(row.n_prefixes) + "," +
           Fixed(row.mean_fidelity) + "\n";
  }
  csv += "weighted_average," + std::to_string(r.total.n_prefixes) + "," +
         Fixed(r.total.mean_fidelity) + "\n";
  WriteFile(dir / "fidelity.csv", csv);
  nlohmann::json doc = r.ToJson();
  doc["config"] = options.explain.config;
  doc["seed"] = o.seed;
  doc["elapsed_seconds"] = r.elapsed_seconds;
  WriteJson(dir / "evaluation.json", doc);

  out << csv;
  std::size_t failed = 0;
  for (const auto& p : r.prefixes) failed += p.error.empty() ? 0 : 1;
  if (failed > 0) out << failed << " prefixes could not be explained (see evaluation.json)\n";
  return kExitOk;
}

int CmdImportance(const RunOptions& o, const std::vector<std::size_t>& lengths,
                  std::size_t max_prefixes, int jobs, std::size_t top_k, std::ostream& out) {
  if (top_k == 0) throw InputError("--top-k must be positive");
  Session s = OpenSession(o, "importance");
  s.explain.config["top_k"] = top_k;
  EvaluateOptions options = MakeEvaluateOptions(s, lengths, max_prefixes, jobs);
  const fs::path dir = PrepareOut(o.out);
  const EvaluationResult r = EvaluatePrefixes(*s.log, s.layout, s.factory, options);
  std::vector<Explanation> explanations;
  for (const auto& p : r.prefixes) {
    if (p.error.empty()) explanations.push_back(p.explanation);
  }
  if (explanations.empty()) throw InputError("no prefix could be explained");
  const auto ranking = AggregateImportance(explanations, top_k);

  std::string csv = "prefix_length,rank,attribute,frequency\n";
  nlohmann::json doc;
  doc["config"] = options.explain.config;
  doc["seed"] = o.seed;
  doc["rankings"] = nlohmann::json::array();
  for (const auto& [length, entries] : ranking) {
    std::size_t n = 0;
    for (const auto& e : explanations) n += e.prefix_length == length ? 1 : 0;
    nlohmann::json item = {{"prefix_length", length}, {"n_prefixes", n}};
    item["attributes"] = nlohmann::json::array();
    for (std::size_t i = 0; i < entries.size(); ++i) {
      csv += std::to_string(length) + "," + std::to_string(i + 1) + "," + entries[i].first +
             "," + Fixed(entries[i].second) + "\n";
      item["attributes"].push_back(
          {{"attribute", entries[i].first}, {"frequency", entries[i].second}});
    }
    doc["rankings"].push_back(std::move(item));
  }
  WriteFile(dir / "importance.csv", csv);
  WriteJson(dir / "importance.json", doc);
  out << csv;
  return kExitOk;
}

int CmdGenerate(const std::string& preset, int traces, std::uint64_t seed,
                const std::string& out_dir, std::ostream& out) {
  if (preset != "loan") throw InputError("unknown preset '" + preset + "'");
  const fs::path dir = PrepareOut(out_dir);
  const ProcessSpec spec = LoanProcess();
  const EventLog log = GenerateSyntheticLog(spec, traces, seed);
  std::ostringstream csv;
  WriteLogCsv(log, csv);
  WriteFile(dir / "log.csv", csv.str());
  WriteJson(dir / "schema.json", log.schema().ToJson());
  WriteJson(dir / "oracle.json", LoanOracle().ToJson());
  out << "wrote " << traces << " traces to " << (dir / "log.csv").string() << "\n";
  return kExitOk;
}

}  // namespace

void ConfigureLogging() {
  static std::once_flag once;
  std::call_once(once, [] {
    auto logger = spdlog::stderr_color_mt("procf");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::warn);
  });
  if (const char* level = std::getenv("PROCF_LOG_LEVEL"); level && *level) {
    spdlog::cfg::helpers::load_levels(level);
  }
}

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  ConfigureLogging();
  CLI::App app{"Counterfactual explanations for process-outcome predictions", "procf"};
  app.require_subcommand(1);

  RunOptions explain_opts, evaluate_opts, importance_opts;
  std::string case_id;
  std::size_t prefix_len = 0;
  auto* explain = app.add_subcommand("explain", "Explain one trace prefix");
  AddRunOptions(explain, explain_opts);
  explain->add_option("--case", case_id, "Case id")->required();
  explain->add_option("--prefix-len", prefix_len, "Prefix length")->required();

  std::vector<std::size_t> eval_lengths, imp_lengths;
  std::size_t eval_max = 0, imp_max = 0, top_k = 5;
  int eval_jobs = 1, imp_jobs = 1;
  auto* evaluate = app.add_subcommand("evaluate", "Mean surrogate fidelity per prefix length");
  AddRunOptions(evaluate, evaluate_opts);
  evaluate->add_option("--prefix-lens", eval_lengths, "Comma-separated prefix lengths")
      ->required()
      ->delimiter(',');
  evaluate->add_option("--max-prefixes", eval_max, "Cap per length, 0 = all")
      ->capture_default_str();
  evaluate->add_option("--jobs", eval_jobs, "Parallel workers")->capture_default_str();

  auto* importance = app.add_subcommand("importance", "Most frequent important attributes");
  AddRunOptions(importance, importance_opts);
  importance->add_option("--prefix-lens", imp_lengths, "Comma-separated prefix lengths")
      ->required()
      ->delimiter(',');
  importance->add_option("--max-prefixes", imp_max, "Cap per length, 0 = all")
      ->capture_default_str();
  importance->add_option("--jobs", imp_jobs, "Parallel workers")->capture_default_str();
  importance->add_option("--top-k", top_k, "Attributes per length")->capture_default_str();

  std::string preset = "loan", gen_out = ".";
  int traces = 2000;
  std::uint64_t gen_seed = 0;
  auto* generate = app.add_subcommand("generate", "Write a seeded synthetic demo log");
  generate->add_option("--preset", preset, "Process preset")->capture_default_str();
  generate->add_option("--traces", traces, "Number of traces")->capture_default_str();
  generate->add_option("--seed", gen_seed, "Generator seed")->capture_default_str();
  generate->add_option("--out", gen_out, "Output directory")->capture_default_str();

  std::vector<std::string> storage{"procf"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : storage) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInputError;
  }

  try {
    if (*explain) return CmdExplain(explain_opts, case_id, prefix_len, out);
    if (*evaluate) return CmdEvaluate(evaluate_opts, eval_lengths, eval_max, eval_jobs, out);
    if (*importance) {
      return CmdImportance(importance_opts, imp_lengths, imp_max, imp_jobs, top_k, out);
    }
    if (*generate) return CmdGenerate(preset, traces, gen_seed, gen_out, out);
  } catch (const PredictorError& e) {
    err << "predictor error: " << e.what() << "\n";
    return kExitPredictorFailure;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitPredictorFailure;
  }
  return kExitInputError;
}

}  // namespace procf
