// dean - quality-gate pipeline for LLM tutor feedback.
//
// Subcommands wrap the library stages 1:1: generate, evaluate, gate,
// metrics, kappa, split, export-finetune, bench, rubric. All inputs come
// from flags, environment variables, or a config file (precedence in that
// order); nothing is interactive. Logs go to stderr, data to files (or
// stdout with --stdout).

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "dean/bench.hpp"
#include "dean/corpus.hpp"
#include "dean/error.hpp"
#include "dean/finetune.hpp"
#include "dean/gate.hpp"
#include "dean/gateway.hpp"
#include "dean/metrics.hpp"
#include "dean/parser.hpp"
#include "dean/prompt.hpp"
#include "dean/rubric.hpp"

namespace {

using dean::Errc;
using dean::Error;

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(Errc::MissingFile, "cannot open " + p.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& p, const std::string& content) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write " + p.string());
  out << content;
}

// Defaults from --config file and DEAN_* environment variables. Flags win
// over env, env wins over the config file.
struct CliConfig {
  std::string rubric_path;
  std::string corpus_path;
  std::string run_store = "runs";
  std::string cassettes;
  std::uint64_t seed = 0;
  dean::GatePolicy policy;

  static CliConfig load(const std::string& config_file) {
    CliConfig cfg;
    if (!config_file.empty()) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(read_file(config_file));
      } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::MalformedConfig, std::string("config file: ") + e.what());
      }
      cfg.rubric_path = j.value("rubric", "");
      cfg.corpus_path = j.value("corpus", "");
      cfg.run_store = j.value("run_store", "runs");
      cfg.cassettes = j.value("cassettes", "");
      cfg.seed = j.value("seed", 0ull);
      if (j.contains("policy")) {
        const auto& p = j["policy"];
        cfg.policy.min_overall_quality = p.value("min_overall_quality", 1.0);
        cfg.policy.allow_hallucinations = p.value("allow_hallucinations", false);
        cfg.policy.max_attempts = p.value("max_attempts", 3);
        cfg.policy.candidates_per_attempt = p.value("candidates_per_attempt", 1);
      }
    }
    if (const char* v = std::getenv("DEAN_RUBRIC")) cfg.rubric_path = v;
    if (const char* v = std::getenv("DEAN_CORPUS")) cfg.corpus_path = v;
    if (const char* v = std::getenv("DEAN_RUN_STORE")) cfg.run_store = v;
    if (const char* v = std::getenv("DEAN_CASSETTES")) cfg.cassettes = v;
    if (const char* v = std::getenv("DEAN_SEED")) cfg.seed = std::stoull(v);
    return cfg;
  }
};

dean::RubricSpec resolve_rubric(const std::string& path) {
  return path.empty() ? dean::default_rubric() : dean::load_rubric(read_file(path));
}

dean::ModelConfig load_model_config(const std::string& path) {
  return dean::ModelConfig::from_json_string(read_file(path));
}

dean::Gateway make_gateway(const std::string& cassettes, bool record) {
  return cassettes.empty() ? dean::Gateway()
                           : dean::Gateway(dean::CassetteStore(cassettes), record);
}

dean::PromptTemplates load_templates(const std::string& eval_tmpl,
                                     const std::string& tutor_tmpl) {
  dean::PromptTemplates t;
  if (!eval_tmpl.empty()) t.eval_template = read_file(eval_tmpl);
  if (!tutor_tmpl.empty()) t.tutor_template = read_file(tutor_tmpl);
  return t;
}

int exit_code_for(Errc c) {
  switch (c) {
    case Errc::MissingFile:
    case Errc::IoError:
      return 4;
    case Errc::MissingCassette:
    case Errc::AuthMissing:
    case Errc::ExhaustedRetries:
      return 5;
    case Errc::RunAborted:
      return 6;
    default:
      return 3;
  }
}

void report_error(const Error& e) {
  nlohmann::json j{{"error", {{"category", e.category_name()}, {"message", e.what()}}}};
  std::cerr << j.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dean: quality gate and benchmark harness for LLM tutor feedback"};
  app.require_subcommand(1);

  std::string config_file;
  app.add_option("--config", config_file, "JSON config file with defaults")
      ->envname("DEAN_CONFIG");

  // Shared option storage; each subcommand binds the subset it uses.
  std::string rubric_path, corpus_path, cassettes, run_store;
  std::string out, out_labels, out_evaluations, out_raw, out_json, out_csv, out_dir,
      out_trail;
  std::string tutor_cfg_path, evaluator_cfg_path, plan_path, pred_path, gold_path,
      labels_path, split_path, matrix_path, feedback_path, submission_id,
      evaluator_name = "evaluator", regime = "plain", mode = "few-shot",
      eval_template, tutor_template, formats = "csv,table,plot";
  std::uint64_t seed = 0;
  bool seed_set = false, record = false, to_stdout = false, dump = false;
  int n_instances = 0, max_in_flight = 4;
  double fraction = 0.5;
  dean::GatePolicy policy;
  bool allow_hallucinations = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--rubric", rubric_path, "rubric config file (default: built-in)");
    cmd->add_option("--cassettes", cassettes, "cassette directory for replay/record");
    cmd->add_flag("--record", record, "record live responses into the cassette store");
  };

  auto* rubric_cmd = app.add_subcommand("rubric", "validate and dump the rubric");
  rubric_cmd->add_option("--rubric", rubric_path, "rubric config file");
  rubric_cmd->add_flag("--dump", dump, "write the canonical rubric config");
  rubric_cmd->add_option("--out", out, "output file for --dump");
  rubric_cmd->add_flag("--stdout", to_stdout, "write to stdout instead of a file");

  auto* generate_cmd = app.add_subcommand("generate", "generate tutor feedback over a corpus");
  add_common(generate_cmd);
  generate_cmd->add_option("--corpus", corpus_path, "corpus directory");
  generate_cmd->add_option("--tutor", tutor_cfg_path, "tutor model config JSON")->required();
  generate_cmd->add_option("--n", n_instances, "submissions to sample")->required();
  generate_cmd->add_option("--seed", seed, "sampling seed")->each([&](const std::string&) {
    seed_set = true;
  });
  generate_cmd->add_option("--out", out, "output feedback JSONL")->required();
  generate_cmd->add_option("--tutor-template", tutor_template, "tutor prompt template file");
  generate_cmd->add_option("--max-in-flight", max_in_flight, "max concurrent requests");

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Dean-evaluate feedback files");
  add_common(evaluate_cmd);
  evaluate_cmd->add_option("--corpus", corpus_path, "corpus directory");
  evaluate_cmd->add_option("--feedback", feedback_path, "feedback JSONL to evaluate")
      ->required();
  evaluate_cmd->add_option("--evaluator", evaluator_cfg_path, "evaluator model config JSON")
      ->required();
  evaluate_cmd->add_option("--mode", mode, "zero-shot | few-shot");
  evaluate_cmd->add_option("--out-labels", out_labels, "parsed labels JSONL")->required();
  evaluate_cmd->add_option("--out-evaluations", out_evaluations, "derived evaluations JSONL");
  evaluate_cmd->add_option("--out-raw", out_raw, "raw evaluator responses JSONL");
  evaluate_cmd->add_option("--eval-template", eval_template, "evaluator prompt template file");

  auto* gate_cmd = app.add_subcommand("gate", "run the gate loop for one submission");
  add_common(gate_cmd);
  gate_cmd->add_option("--corpus", corpus_path, "corpus directory");
  gate_cmd->add_option("--submission-id", submission_id, "submission to tutor")->required();
  gate_cmd->add_option("--tutor", tutor_cfg_path, "tutor model config JSON")->required();
  gate_cmd->add_option("--evaluator", evaluator_cfg_path, "evaluator model config JSON")
      ->required();
  gate_cmd->add_option("--mode", mode, "zero-shot | few-shot");
  auto* min_quality_opt = gate_cmd->add_option(
      "--min-quality", policy.min_overall_quality, "overall quality acceptance threshold");
  auto* allow_hallu_opt = gate_cmd->add_flag(
      "--allow-hallucinations", allow_hallucinations, "do not reject flagged hallucinations");
  auto* max_attempts_opt =
      gate_cmd->add_option("--max-attempts", policy.max_attempts, "regeneration attempts");
  auto* candidates_opt = gate_cmd->add_option(
      "--candidates", policy.candidates_per_attempt, "candidates per attempt");
  gate_cmd->add_option("--out", out, "decision JSON output")->required();
  gate_cmd->add_option("--out-trail", out_trail, "audit trail JSONL output");
  gate_cmd->add_option("--eval-template", eval_template, "evaluator prompt template file");
  gate_cmd->add_option("--tutor-template", tutor_template, "tutor prompt template file");

  auto* metrics_cmd = app.add_subcommand("metrics", "score predicted labels against gold");
  metrics_cmd->add_option("--rubric", rubric_path, "rubric config file");
  metrics_cmd->add_option("--pred", pred_path, "predicted labels JSONL")->required();
  metrics_cmd->add_option("--gold", gold_path, "gold labels JSONL")->required();
  metrics_cmd->add_option("--evaluator-name", evaluator_name, "row name for the CSV");
  metrics_cmd->add_option("--out-json", out_json, "full report JSON");
  metrics_cmd->add_option("--out-csv", out_csv, "table-shaped CSV");
  metrics_cmd->add_flag("--stdout", to_stdout, "also print the CSV to stdout");

  auto* kappa_cmd = app.add_subcommand("kappa", "Fleiss' kappa from a count-matrix CSV");
  kappa_cmd->add_option("--matrix", matrix_path, "items x categories counts CSV")
      ->required();

  auto* split_cmd = app.add_subcommand("split", "stratified train/test split");
  split_cmd->add_option("--rubric", rubric_path, "rubric config file");
  split_cmd->add_option("--corpus", corpus_path, "corpus directory");
  split_cmd->add_option("--labels", labels_path, "labels JSONL")->required();
  split_cmd->add_option("--fraction", fraction, "train fraction in (0,1)");
  split_cmd->add_option("--seed", seed, "shuffle seed")->each([&](const std::string&) {
    seed_set = true;
  });
  split_cmd->add_option("--out", out, "split JSONL output")->required();

  auto* export_cmd = app.add_subcommand("export-finetune", "build fine-tuning datasets");
  export_cmd->add_option("--rubric", rubric_path, "rubric config file");
  export_cmd->add_option("--corpus", corpus_path, "corpus directory");
  export_cmd->add_option("--labels", labels_path, "labels JSONL")->required();
  export_cmd->add_option("--split", split_path, "split JSONL; keeps the Train side");
  export_cmd->add_option("--regime", regime, "plain | explanatory | staged");
  export_cmd->add_option("--seed", seed, "staged half-split seed")
      ->each([&](const std::string&) { seed_set = true; });
  export_cmd->add_option("--out-dir", out_dir, "output directory")->required();

  auto* bench_cmd = app.add_subcommand("bench", "run a tutor comparison benchmark");
  add_common(bench_cmd);
  bench_cmd->add_option("--plan", plan_path, "bench plan JSON")->required();
  auto* run_store_opt =
      bench_cmd->add_option("--run-store", run_store, "run store root directory");
  bench_cmd->add_option("--formats", formats, "comma list of csv,table,plot");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    const CliConfig defaults = CliConfig::load(config_file);
    if (rubric_path.empty()) rubric_path = defaults.rubric_path;
    if (corpus_path.empty()) corpus_path = defaults.corpus_path;
    if (cassettes.empty()) cassettes = defaults.cassettes;
    if (!seed_set) seed = defaults.seed;
    if (run_store_opt->count() == 0) run_store = defaults.run_store;

    if (app.got_subcommand(rubric_cmd)) {
      const dean::RubricSpec rubric = resolve_rubric(rubric_path);
      const std::string config = dean::serialize_rubric(rubric);
      if (dump) {
        if (to_stdout)
          std::cout << config;
        else
          write_file(out.empty() ? "rubric.json" : out, config);
      }
      std::cerr << "rubric ok: version " << rubric.version() << ", " << rubric.size()
                << " dimensions\n";
      return 0;
    }

    if (app.got_subcommand(generate_cmd)) {
      const dean::RubricSpec rubric = resolve_rubric(rubric_path);
      const dean::Corpus corpus = dean::load_corpus(corpus_path, &rubric);
      const dean::ModelConfig tutor = load_model_config(tutor_cfg_path);
      dean::Gateway gateway = make_gateway(cassettes, record);
      const auto templates = load_templates("", tutor_template);

      const auto sample = dean::sample_submissions(corpus, n_instances, seed);
      std::vector<std::string> prompts;
      for (const auto& sid : sample)
        prompts.push_back(dean::build_tutor_prompt(
            *corpus.assignment_of_submission(sid), *corpus.find_submission(sid),
            templates));
      const auto results = gateway.complete_batch(prompts, tutor, max_in_flight);

      std::vector<dean::FeedbackInstance> feedback;
      std::size_t failed = 0;
      for (std::size_t i = 0; i < results.size(); ++i) {
        if (!results[i].ok()) {
          ++failed;
          std::cerr << "generate: " << sample[i] << " failed: "
                    << results[i].error_category << ": " << results[i].error_message
                    << "\n";
          continue;
        }
        dean::FeedbackInstance f;
        f.id = dean::bench_feedback_id(tutor.model_id, sample[i]);
        f.submission_id = sample[i];
        f.tutor_model = tutor.model_id;
        f.text = results[i].outcome->text;
        f.generation_params.temperature = tutor.temperature;
        f.generation_params.reasoning_effort = tutor.reasoning_effort;
        feedback.push_back(std::move(f));
      }
      if (feedback.empty())
        throw Error(Errc::EmptyInput, "every generation failed (" +
                                          std::to_string(failed) + " of " +
                                          std::to_string(results.size()) + ")");
      dean::save_feedback_file(feedback, out);
      std::cerr << "generated " << feedback.size() << " feedback instances (" << failed
                << " failed) -> " << out << "\n";
      return 0;
    }

    if (app.got_subcommand(evaluate_cmd)) {
      const dean::RubricSpec rubric = resolve_rubric(rubric_path);
      const dean::Corpus corpus = dean::load_corpus(corpus_path, &rubric);
      const dean::ModelConfig evaluator = load_model_config(evaluator_cfg_path);
      dean::Gateway gateway = make_gateway(cassettes, record);
      const auto templates = load_templates(eval_template, "");
      const auto prompt_mode = dean::prompt_mode_from_string(mode);

      const auto feedback = dean::load_feedback_file(feedback_path);
      std::vector<dean::LabelRecord> labels;
      std::ostringstream evaluations_out, raw_out;
      std::size_t failed = 0;
      for (const auto& f : feedback) {
        const dean::Submission* sub = corpus.find_submission(f.submission_id);
        if (!sub)
          throw Error(Errc::DanglingReference,
                      "feedback '" + f.id + "' references missing submission");
        const dean::Assignment* asg = corpus.assignment_of_submission(f.submission_id);
        const auto outcome = dean::evaluate_feedback(*asg, *sub, f, rubric, prompt_mode,
                                                     evaluator, gateway, templates);
        if (!outcome.raw_response.empty()) {
          raw_out << nlohmann::json{{"feedback_id", f.id},
                                    {"response", outcome.raw_response},
                                    {"repaired", outcome.repaired}}
                         .dump()
                  << "\n";
        }
        if (!outcome.ok()) {
          ++failed;
          std::cerr << "evaluate: " << f.id << " failed: "
                    << (outcome.error_category.empty() ? "Unparseable"
                                                       : outcome.error_category)
                    << "\n";
          continue;
        }
        labels.push_back(outcome.result->label);
        nlohmann::json ej{{"feedback_id", f.id},
                          {"overall_quality", outcome.result->overall_quality},
                          {"content_mean", outcome.result->content_mean},
                          {"effectiveness_mean", outcome.result->effectiveness_mean},
                          {"hallucination_flags", outcome.result->hallucination_flags}};
        evaluations_out << ej.dump() << "\n";
      }
      dean::save_labels(labels, out_labels);
      if (!out_evaluations.empty()) write_file(out_evaluations, evaluations_out.str());
      if (!out_raw.empty()) write_file(out_raw, raw_out.str());
      std::cerr << "evaluated " << labels.size() << " of " << feedback.size()
                << " feedback instances (" << failed << " failed)\n";
      return 0;
    }

    if (app.got_subcommand(gate_cmd)) {
      const dean::RubricSpec rubric = resolve_rubric(rubric_path);
      const dean::Corpus corpus = dean::load_corpus(corpus_path, &rubric);
      const dean::ModelConfig tutor = load_model_config(tutor_cfg_path);
      const dean::ModelConfig evaluator = load_model_config(evaluator_cfg_path);
      dean::Gateway gateway = make_gateway(cassettes, record);
      const auto templates = load_templates(eval_template, tutor_template);
      // Flags > config-file policy > built-in defaults.
      if (min_quality_opt->count() == 0)
        policy.min_overall_quality = defaults.policy.min_overall_quality;
      if (max_attempts_opt->count() == 0)
        policy.max_attempts = defaults.policy.max_attempts;
      if (candidates_opt->count() == 0)
        policy.candidates_per_attempt = defaults.policy.candidates_per_attempt;
      policy.allow_hallucinations =
          allow_hallu_opt->count() ? allow_hallucinations
                                   : defaults.policy.allow_hallucinations;

      const dean::Submission* sub = corpus.find_submission(submission_id);
      if (!sub)
        throw Error(Errc::DanglingReference, "unknown submission '" + submission_id + "'");
      const dean::Assignment* asg = corpus.assignment_of_submission(submission_id);

      const auto result = dean::gate_loop(*asg, *sub, tutor, evaluator, policy, rubric,
                                          dean::prompt_mode_from_string(mode), gateway,
                                          templates, max_in_flight);
      nlohmann::ordered_json j;
      j["accepted"] = result.ok();
      if (result.ok()) {
        j["attempt"] = result.accepted_attempt;
        j["feedback"] = result.accepted->text;
        j["overall_quality"] = result.accepted_decision->evaluation.overall_quality;
      }
      j["attempts_used"] = result.trail.empty() ? 0 : result.trail.back().attempt;
      j["candidates_audited"] = result.trail.size();
      write_file(out, j.dump(2) + "\n");
      if (!out_trail.empty()) write_file(out_trail, dean::trail_to_jsonl(result.trail));
      std::cerr << (result.ok() ? "accepted" : "no candidate passed the gate") << "\n";
      return 0;
    }

    if (app.got_subcommand(metrics_cmd)) {
      const dean::RubricSpec rubric = resolve_rubric(rubric_path);
      const auto pred = dean::load_labels(pred_path);
      const auto gold = dean::load_labels(gold_path);
      const dean::MetricsReport report = dean::score_metrics(pred, gold, rubric);
      const std::string csv = dean::render_metrics_csv({{evaluator_name, report}});
      if (!out_json.empty()) write_file(out_json, dean::metrics_report_to_json(report));
      if (!out_csv.empty()) write_file(out_csv, csv);
      if (to_stdout || (out_json.empty() && out_csv.empty())) std::cout << csv;
      return 0;
    }

    if (app.got_subcommand(kappa_cmd)) {
      dean::AgreementInput input;
      std::istringstream in(read_file(matrix_path));
      std::string line;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<int> row;
        std::istringstream cells(line);
        std::string cell;
        while (std::getline(cells, cell, ',')) row.push_back(std::stoi(cell));
        input.counts.push_back(std::move(row));
      }
      if (input.counts.empty()) throw Error(Errc::EmptyInput, "matrix file has no rows");
      int sum = 0;
      for (int v : input.counts.front()) sum += v;
      input.raters_per_item = sum;
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.4f", dean::fleiss_kappa(input));
      std::cout << buf << "\n";
      return 0;
    }

    if (app.got_subcommand(split_cmd)) {
      const dean::RubricSpec rubric = resolve_rubric(rubric_path);
      const dean::Corpus corpus = dean::load_corpus(corpus_path, &rubric);
      const auto labels = dean::load_labels(labels_path);
      const auto split = dean::stratified_split(labels, corpus, fraction, seed);
      dean::save_split(split, out);
      std::cerr << "split " << split.train_count() << " train / " << split.test_count()
                << " test -> " << out << "\n";
      return 0;
    }

    if (app.got_subcommand(export_cmd)) {
      const dean::RubricSpec rubric = resolve_rubric(rubric_path);
      const dean::Corpus corpus = dean::load_corpus(corpus_path, &rubric);
      auto labels = dean::load_labels(labels_path);
      if (!split_path.empty()) {
        const auto split = dean::load_split(split_path);
        std::vector<dean::LabelRecord> train;
        for (const auto& l : labels) {
          auto it = split.side.find(l.feedback_id);
          if (it != split.side.end() && it->second == dean::SplitSide::Train)
            train.push_back(l);
        }
        labels = std::move(train);
      }
      dean::ExportManifest manifest;
      switch (dean::regime_from_string(regime)) {
        case dean::Regime::Plain:
          manifest = dean::export_plain(labels, corpus, rubric, out_dir);
          break;
        case dean::Regime::Explanatory: {
          std::vector<dean::LabelRecord> explanatory;
          for (const auto& l : labels)
            if (l.explanation && !l.explanation->empty()) explanatory.push_back(l);
          manifest = dean::export_explanatory(explanatory, corpus, rubric, out_dir);
          break;
        }
        case dean::Regime::Staged:
          manifest = dean::export_staged(labels, corpus, rubric, seed, out_dir);
          break;
      }
      for (const auto& [name, count] : manifest.files)
        std::cerr << name << ": " << count << " records\n";
      return 0;
    }

    if (app.got_subcommand(bench_cmd)) {
      const dean::RubricSpec rubric = resolve_rubric(rubric_path);
      const dean::BenchPlan plan = dean::BenchPlan::load(plan_path);
      dean::Gateway gateway = make_gateway(cassettes, record);
      const dean::BenchReport report = dean::run_bench(plan, rubric, run_store, gateway);
      const auto run_dir = std::filesystem::path(run_store) / plan.run_id;
      if (formats.find("csv") != std::string::npos)
        dean::render_report(report, dean::ReportFormat::Csv, run_dir);
      if (formats.find("table") != std::string::npos)
        dean::render_report(report, dean::ReportFormat::TableText, run_dir);
      if (formats.find("plot") != std::string::npos)
        dean::render_report(report, dean::ReportFormat::PlotData, run_dir);
      std::cerr << "bench " << plan.run_id << ": " << report.tutors.size()
                << " tutors -> " << run_dir.string() << "\n";
      return 0;
    }
  } catch (const Error& e) {
    report_error(e);
    return exit_code_for(e.category());
  } catch (const std::exception& e) {
    nlohmann::json j{{"error", {{"category", "Unknown"}, {"message", e.what()}}}};
    std::cerr << j.dump() << "\n";
    return 1;
  }
  return 0;
}
