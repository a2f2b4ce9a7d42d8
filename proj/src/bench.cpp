#include "dean/bench.hpp"

#include <algorithm>
#include <cctype>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "json.hpp"

#include "dean/error.hpp"
#include "dean/rng.hpp"
#include "jsonl.hpp"

namespace dean {

namespace {

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string sanitize(const std::string& s) {
  std::string out;
  for (char c : s)
    out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '.' ||
                          c == '_' || c == '-'
                      ? c
                      : '_');
  return out;
}

bool offline_provider(Provider p) { return p != Provider::HttpChatCompletions; }

std::string utc_now_iso8601() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::ordered_json model_config_to_json(const ModelConfig& cfg) {
  return nlohmann::ordered_json::parse(cfg.to_json_string());
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  return ModelConfig::from_json_string(j.dump());
}

nlohmann::json interval_to_json(const IntervalEstimate& e) {
  return {{"mean", e.mean},
          {"lo", e.lo},
          {"hi", e.hi},
          {"n_resamples", e.n_resamples},
          {"seed", e.seed}};
}

IntervalEstimate interval_from_json(const nlohmann::json& j) {
  IntervalEstimate e;
  e.mean = j.at("mean").get<double>();
  e.lo = j.at("lo").get<double>();
  e.hi = j.at("hi").get<double>();
  e.n_resamples = j.at("n_resamples").get<int>();
  e.seed = j.at("seed").get<std::uint64_t>();
  return e;
}

nlohmann::json evaluation_to_json(const EvaluationResult& e) {
  nlohmann::json j;
  j["feedback_id"] = e.label.feedback_id;
  j["rater"] = e.label.rater;
  j["scores"] = e.label.scores;
  if (e.label.explanation) j["explanation"] = *e.label.explanation;
  j["overall_quality"] = e.overall_quality;
  j["content_mean"] = e.content_mean;
  j["effectiveness_mean"] = e.effectiveness_mean;
  j["hallucination_flags"] = e.hallucination_flags;
  return j;
}

EvaluationResult evaluation_from_json(const nlohmann::json& j) {
  EvaluationResult e;
  e.label.feedback_id = j.at("feedback_id").get<std::string>();
  e.label.rater = j.at("rater").get<std::string>();
  for (const auto& [k, v] : j.at("scores").items()) e.label.scores[k] = v.get<int>();
  if (j.contains("explanation")) e.label.explanation = j["explanation"].get<std::string>();
  e.overall_quality = j.at("overall_quality").get<double>();
  e.content_mean = j.at("content_mean").get<double>();
  e.effectiveness_mean = j.at("effectiveness_mean").get<double>();
  for (const auto& f : j.at("hallucination_flags"))
    e.hallucination_flags.insert(f.get<std::string>());
  return e;
}

struct BenchFailure {
  std::string stage;  // generate | evaluate
  std::string tutor_model;
  std::string submission_id;
  std::string feedback_id;
  std::string error_category;
  std::string error_message;
};

double hallucination_score(const EvaluationResult& e, const RubricSpec& rubric) {
  const auto dims = rubric.by_aspect(Aspect::Hallucination);
  if (dims.empty()) return 0.0;
  double sum = 0.0;
  for (const auto* d : dims) sum += e.label.scores.at(d->id);
  return sum / static_cast<double>(dims.size());
}

IntervalEstimate bootstrap_values(const std::vector<double>& values, int n_resamples,
                                  std::uint64_t seed) {
  // Percentile bootstrap over raw values; mirrors mean_likert but without
  // the EvaluationResult selector.
  Rng rng(seed);
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  std::vector<double> means;
  means.reserve(static_cast<std::size_t>(n_resamples));
  for (int r = 0; r < n_resamples; ++r) {
    double sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) sum += values[rng.below(values.size())];
    means.push_back(sum / static_cast<double>(values.size()));
  }
  std::sort(means.begin(), means.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(means.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = static_cast<std::size_t>(std::ceil(pos));
    const double frac = pos - std::floor(pos);
    return means[lo] * (1.0 - frac) + means[hi] * frac;
  };
  IntervalEstimate est;
  est.mean = mean;
  est.lo = std::min(quantile(0.025), mean);
  est.hi = std::max(quantile(0.975), mean);
  est.n_resamples = n_resamples;
  est.seed = seed;
  return est;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out << content;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::MissingFile, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

void BenchPlan::validate() const {
  if (tutors.empty()) throw Error(Errc::InvalidPlan, "bench plan: no tutors");
  if (instances_per_tutor < 1)
    throw Error(Errc::InvalidPlan, "bench plan: instances_per_tutor must be >= 1");
  if (bootstrap_resamples < 1)
    throw Error(Errc::InvalidPlan, "bench plan: bootstrap_resamples must be >= 1");
  if (max_in_flight < 1)
    throw Error(Errc::InvalidPlan, "bench plan: max_in_flight must be >= 1");
  if (run_id.empty() || run_id != sanitize(run_id))
    throw Error(Errc::InvalidPlan,
                "bench plan: run_id must be a filesystem-safe token");
  for (const auto& t : tutors) t.validate();
  evaluator.validate();
}

std::string BenchPlan::to_json_string() const {
  nlohmann::ordered_json j;
  j["run_id"] = run_id;
  j["tutors"] = nlohmann::ordered_json::array();
  for (const auto& t : tutors) j["tutors"].push_back(model_config_to_json(t));
  j["evaluator"] = model_config_to_json(evaluator);
  j["corpus"] = corpus_path.string();
  j["instances_per_tutor"] = instances_per_tutor;
  j["prompt_mode"] = prompt_mode_name(mode);
  j["seed"] = seed;
  j["bootstrap_resamples"] = bootstrap_resamples;
  j["max_in_flight"] = max_in_flight;
  return j.dump(2) + "\n";
}

BenchPlan BenchPlan::from_json_string(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidPlan, std::string("bench plan: ") + e.what());
  }
  BenchPlan plan;
  try {
    plan.run_id = j.value("run_id", "run");
    for (const auto& tj : j.at("tutors")) plan.tutors.push_back(model_config_from_json(tj));
    plan.evaluator = model_config_from_json(j.at("evaluator"));
    plan.corpus_path = j.at("corpus").get<std::string>();
    plan.instances_per_tutor = j.at("instances_per_tutor").get<int>();
    plan.mode = prompt_mode_from_string(j.value("prompt_mode", "few_shot"));
    plan.seed = j.value("seed", 0ull);
    plan.bootstrap_resamples = j.value("bootstrap_resamples", 10000);
    plan.max_in_flight = j.value("max_in_flight", 4);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidPlan, std::string("bench plan: ") + e.what());
  }
  plan.validate();
  return plan;
}

BenchPlan BenchPlan::load(const std::filesystem::path& file) {
  return from_json_string(read_text_file(file));
}

std::vector<std::string> sample_submissions(const Corpus& corpus, int instances,
                                            std::uint64_t seed) {
  std::vector<std::string> ids;
  ids.reserve(corpus.submissions().size());
  for (const auto& s : corpus.submissions()) ids.push_back(s.id);
  std::sort(ids.begin(), ids.end());
  if (static_cast<std::size_t>(instances) > ids.size())
    throw Error(Errc::InvalidPlan,
                "instances_per_tutor (" + std::to_string(instances) +
                    ") exceeds available submissions (" + std::to_string(ids.size()) + ")");
  Rng rng(seed);
  rng.shuffle(ids);
  ids.resize(static_cast<std::size_t>(instances));
  return ids;
}

std::string bench_feedback_id(const std::string& tutor_model,
                              const std::string& submission_id) {
  return sanitize(tutor_model) + "__" + sanitize(submission_id);
}

namespace {

BenchReport aggregate(const BenchPlan& plan, const RubricSpec& rubric,
                      const Corpus& corpus,
                      const std::vector<FeedbackInstance>& feedback,
                      const std::vector<EvaluationResult>& evaluations,
                      const std::string& generated_at) {
  std::map<std::string, const FeedbackInstance*> feedback_by_id;
  for (const auto& f : feedback) feedback_by_id[f.id] = &f;

  // Evaluations grouped by tutor, in persisted order.
  std::map<std::string, std::vector<const EvaluationResult*>> by_tutor;
  for (const auto& e : evaluations) {
    auto it = feedback_by_id.find(e.label.feedback_id);
    if (it == feedback_by_id.end())
      throw Error(Errc::DanglingReference, "evaluation references missing feedback '" +
                                               e.label.feedback_id + "'");
    by_tutor[it->second->tutor_model].push_back(&e);
  }

  std::set<std::string> origins;
  for (const auto& s : corpus.submissions())
    origins.insert(s.origin.empty() ? "default" : s.origin);

  BenchReport report;
  report.rubric_version = rubric.version();
  report.evaluator_id = plan.evaluator.model_id;
  report.seed = plan.seed;
  report.mode = plan.mode;
  report.generated_at = generated_at;

  for (const auto& tutor : plan.tutors) {
    TutorReport tr;
    tr.tutor_model = tutor.model_id;
    tr.n_requested = static_cast<std::size_t>(plan.instances_per_tutor);
    const auto& evals = by_tutor[tutor.model_id];
    tr.n_evaluated = evals.size();
    tr.n_failed = tr.n_requested - std::min(tr.n_requested, tr.n_evaluated);

    std::vector<EvaluationResult> owned;
    owned.reserve(evals.size());
    for (const auto* e : evals) owned.push_back(*e);

    auto family_seed = [&](const std::string& family) {
      return plan.seed ^ fnv1a64(tutor.model_id + "\x1f" + family);
    };
    tr.overall = mean_likert(owned, ScoreSelector::Overall, plan.bootstrap_resamples,
                             family_seed("overall"));
    tr.content = mean_likert(owned, ScoreSelector::Content, plan.bootstrap_resamples,
                             family_seed("content"));
    tr.effectiveness = mean_likert(owned, ScoreSelector::Effectiveness,
                                   plan.bootstrap_resamples, family_seed("effectiveness"));
    std::vector<double> hallu;
    hallu.reserve(owned.size());
    for (const auto& e : owned) hallu.push_back(hallucination_score(e, rubric));
    tr.hallucination =
        bootstrap_values(hallu, plan.bootstrap_resamples, family_seed("hallucination"));
    tr.hallucination_rates = hallucination_rates(owned, rubric);

    if (origins.size() > 1) {
      std::map<std::string, std::vector<EvaluationResult>> by_origin;
      for (const auto& e : owned) {
        const auto* f = feedback_by_id.at(e.label.feedback_id);
        const auto* s = corpus.find_submission(f->submission_id);
        by_origin[s && !s->origin.empty() ? s->origin : "default"].push_back(e);
      }
      for (const auto& [origin, group] : by_origin) {
        OriginAggregate agg;
        agg.n = group.size();
        agg.overall = mean_likert(group, ScoreSelector::Overall, plan.bootstrap_resamples,
                                  family_seed("overall:" + origin));
        agg.hallucination_mean_of_types =
            hallucination_rates(group, rubric).mean_of_types;
        tr.by_origin[origin] = std::move(agg);
      }
    }
    report.tutors.push_back(std::move(tr));
  }
  return report;
}

}  // namespace

std::string bench_report_to_json(const BenchReport& report) {
  nlohmann::ordered_json j;
  j["rubric_version"] = report.rubric_version;
  j["evaluator_id"] = report.evaluator_id;
  j["seed"] = report.seed;
  j["prompt_mode"] = prompt_mode_name(report.mode);
  j["generated_at"] = report.generated_at;
  j["tutors"] = nlohmann::ordered_json::array();
  for (const auto& t : report.tutors) {
    nlohmann::ordered_json tj;
    tj["tutor_model"] = t.tutor_model;
    tj["n_requested"] = t.n_requested;
    tj["n_evaluated"] = t.n_evaluated;
    tj["n_failed"] = t.n_failed;
    tj["overall"] = interval_to_json(t.overall);
    tj["content"] = interval_to_json(t.content);
    tj["effectiveness"] = interval_to_json(t.effectiveness);
    tj["hallucination"] = interval_to_json(t.hallucination);
    tj["hallucination_rates"] = t.hallucination_rates.per_type;
    tj["hallucination_mean_of_types"] = t.hallucination_rates.mean_of_types;
    if (!t.by_origin.empty()) {
      nlohmann::ordered_json oj;
      for (const auto& [origin, agg] : t.by_origin)
        oj[origin] = {{"n", agg.n},
                      {"overall", interval_to_json(agg.overall)},
                      {"hallucination_mean_of_types", agg.hallucination_mean_of_types}};
      tj["by_origin"] = std::move(oj);
    }
    j["tutors"].push_back(std::move(tj));
  }
  return j.dump(2) + "\n";
}

BenchReport bench_report_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::MalformedConfig, std::string("bench report: ") + e.what());
  }
  BenchReport report;
  report.rubric_version = j.at("rubric_version").get<std::string>();
  report.evaluator_id = j.at("evaluator_id").get<std::string>();
  report.seed = j.at("seed").get<std::uint64_t>();
  report.mode = prompt_mode_from_string(j.at("prompt_mode").get<std::string>());
  report.generated_at = j.value("generated_at", "");
  for (const auto& tj : j.at("tutors")) {
    TutorReport t;
    t.tutor_model = tj.at("tutor_model").get<std::string>();
    t.n_requested = tj.at("n_requested").get<std::size_t>();
    t.n_evaluated = tj.at("n_evaluated").get<std::size_t>();
    t.n_failed = tj.at("n_failed").get<std::size_t>();
    t.overall = interval_from_json(tj.at("overall"));
    t.content = interval_from_json(tj.at("content"));
    t.effectiveness = interval_from_json(tj.at("effectiveness"));
    t.hallucination = interval_from_json(tj.at("hallucination"));
    for (const auto& [k, v] : tj.at("hallucination_rates").items())
      t.hallucination_rates.per_type[k] = v.get<double>();
    t.hallucination_rates.mean_of_types = tj.at("hallucination_mean_of_types").get<double>();
    if (tj.contains("by_origin")) {
      for (const auto& [origin, oj] : tj["by_origin"].items()) {
        OriginAggregate agg;
        agg.n = oj.at("n").get<std::size_t>();
        agg.overall = interval_from_json(oj.at("overall"));
        agg.hallucination_mean_of_types =
            oj.at("hallucination_mean_of_types").get<double>();
        t.by_origin[origin] = std::move(agg);
      }
    }
    report.tutors.push_back(std::move(t));
  }
  return report;
}

BenchReport run_bench(const BenchPlan& plan, const RubricSpec& rubric,
                      const std::filesystem::path& run_root, Gateway& gateway) {
  plan.validate();
  const Corpus corpus = load_corpus(plan.corpus_path);
  const auto sample = sample_submissions(corpus, plan.instances_per_tutor, plan.seed);

  const auto run_dir = run_root / plan.run_id;
  std::filesystem::create_directories(run_dir);

  // Refuse to resume a run directory created from a different plan.
  const std::string plan_text = plan.to_json_string();
  const auto plan_path = run_dir / "plan.json";
  if (std::filesystem::exists(plan_path)) {
    if (read_text_file(plan_path) != plan_text)
      throw Error(Errc::InvalidPlan,
                  "run directory " + run_dir.string() + " holds a different plan");
  } else {
    write_text_file(plan_path, plan_text);
  }

  const bool offline = offline_provider(plan.evaluator.provider) &&
                       std::all_of(plan.tutors.begin(), plan.tutors.end(),
                                   [](const ModelConfig& t) {
                                     return offline_provider(t.provider);
                                   });
  const std::string generated_at = offline ? "" : utc_now_iso8601();

  std::vector<BenchFailure> failures;

  // Stage 1: feedback generation, persisted before any evaluation.
  const auto feedback_path = run_dir / "feedback.jsonl";
  std::vector<FeedbackInstance> feedback;
  if (std::filesystem::exists(feedback_path)) {
    feedback = load_feedback_file(feedback_path);
  } else {
    for (const auto& tutor : plan.tutors) {
      std::vector<std::string> prompts;
      prompts.reserve(sample.size());
      for (const auto& sid : sample) {
        const Submission* sub = corpus.find_submission(sid);
        const Assignment* asg = corpus.assignment_of_submission(sid);
        prompts.push_back(build_tutor_prompt(*asg, *sub));
      }
      const auto results = gateway.complete_batch(prompts, tutor, plan.max_in_flight);
      for (std::size_t i = 0; i < results.size(); ++i) {
        if (!results[i].ok()) {
          failures.push_back({"generate", tutor.model_id, sample[i], "",
                              results[i].error_category, results[i].error_message});
          continue;
        }
        FeedbackInstance f;
        f.id = bench_feedback_id(tutor.model_id, sample[i]);
        f.submission_id = sample[i];
        f.tutor_model = tutor.model_id;
        f.text = results[i].outcome->text;
        f.generation_params.temperature = tutor.temperature;
        f.generation_params.reasoning_effort = tutor.reasoning_effort;
        f.generation_params.timestamp = generated_at;
        feedback.push_back(std::move(f));
      }
    }
    save_feedback_file(feedback, feedback_path);
  }

  // Stage 2: Dean evaluation of every persisted feedback instance.
  const auto evaluations_path = run_dir / "evaluations.jsonl";
  std::vector<EvaluationResult> evaluations;
  if (std::filesystem::exists(evaluations_path)) {
    jsonl::for_each_record(evaluations_path, [&](const nlohmann::json& j) {
      evaluations.push_back(evaluation_from_json(j));
    });
  } else {
    std::vector<std::string> prompts;
    prompts.reserve(feedback.size());
    for (const auto& f : feedback) {
      const Submission* sub = corpus.find_submission(f.submission_id);
      const Assignment* asg = corpus.assignment_of_submission(f.submission_id);
      prompts.push_back(
          build_eval_prompt(*asg, *sub, f, rubric, plan.mode).text);
    }
    const auto results =
        gateway.complete_batch(prompts, plan.evaluator, plan.max_in_flight);

    jsonl::Writer raw_writer(run_dir / "evaluator_raw.jsonl");
    std::vector<LabelRecord> labels;
    for (std::size_t i = 0; i < results.size(); ++i) {
      const auto& f = feedback[i];
      if (!results[i].ok()) {
        failures.push_back({"evaluate", f.tutor_model, f.submission_id, f.id,
                            results[i].error_category, results[i].error_message});
        continue;
      }
      std::string response = results[i].outcome->text;
      ParseReport parsed =
          parse_labels(response, rubric, plan.evaluator.model_id, f.id);
      bool repaired = false;
      if (!parsed.ok()) {
        // Single repair ask with the parse errors appended.
        const std::string repair_prompt =
            prompts[i] + "\n\nYour previous response could not be parsed: " +
            parsed.issue_summary() +
            "\nRe-emit the full label block in the required format.";
        repaired = true;
        try {
          response = gateway.complete(repair_prompt, plan.evaluator).text;
          parsed = parse_labels(response, rubric, plan.evaluator.model_id, f.id);
        } catch (const Error& e) {
          failures.push_back({"evaluate", f.tutor_model, f.submission_id, f.id,
                              e.category_name(), e.what()});
          continue;
        }
      }
      raw_writer.write({{"feedback_id", f.id},
                        {"response", response},
                        {"repaired", repaired}});
      if (!parsed.ok()) {
        failures.push_back({"evaluate", f.tutor_model, f.submission_id, f.id,
                            "Unparseable", parsed.issue_summary()});
        continue;
      }
      labels.push_back(*parsed.record);
      evaluations.push_back(derive_evaluation(*parsed.record, rubric));
    }
    save_labels(labels, run_dir / "labels.jsonl");
    {
      jsonl::Writer w(evaluations_path);
      for (const auto& e : evaluations) w.write(evaluation_to_json(e));
    }
    {
      jsonl::Writer w(run_dir / "failures.jsonl");
      for (const auto& fl : failures)
        w.write({{"stage", fl.stage},
                 {"tutor_model", fl.tutor_model},
                 {"submission_id", fl.submission_id},
                 {"feedback_id", fl.feedback_id},
                 {"error_category", fl.error_category},
                 {"error_message", fl.error_message}});
    }
  }

  // Abort (after persistence) when a tutor lost more than half its sample.
  std::map<std::string, const FeedbackInstance*> feedback_by_id;
  for (const auto& f : feedback) feedback_by_id[f.id] = &f;
  std::map<std::string, std::size_t> evaluated_per_tutor;
  for (const auto& e : evaluations) {
    auto it = feedback_by_id.find(e.label.feedback_id);
    if (it == feedback_by_id.end())
      throw Error(Errc::DanglingReference,
                  "persisted evaluation references missing feedback '" +
                      e.label.feedback_id + "'");
    ++evaluated_per_tutor[it->second->tutor_model];
  }
  for (const auto& tutor : plan.tutors) {
    const auto evaluated = evaluated_per_tutor[tutor.model_id];
    if (2 * evaluated < static_cast<std::size_t>(plan.instances_per_tutor))
      throw Error(Errc::RunAborted,
                  "tutor '" + tutor.model_id + "' lost " +
                      std::to_string(plan.instances_per_tutor -
                                     static_cast<int>(evaluated)) +
                      " of " + std::to_string(plan.instances_per_tutor) +
                      " instances; artifacts kept in " + run_dir.string());
  }

  BenchReport report =
      aggregate(plan, rubric, corpus, feedback, evaluations, generated_at);
  write_text_file(run_dir / "report.json", bench_report_to_json(report));
  return report;
}

std::string recompute_report_json(const BenchPlan& plan, const RubricSpec& rubric,
                                  const std::filesystem::path& run_dir) {
  const Corpus corpus = load_corpus(plan.corpus_path);
  const auto feedback = load_feedback_file(run_dir / "feedback.jsonl");
  std::vector<EvaluationResult> evaluations;
  jsonl::for_each_record(run_dir / "evaluations.jsonl", [&](const nlohmann::json& j) {
    evaluations.push_back(evaluation_from_json(j));
  });
  const std::string stored_generated_at =
      bench_report_from_json(read_text_file(run_dir / "report.json")).generated_at;
  return bench_report_to_json(
      aggregate(plan, rubric, corpus, feedback, evaluations, stored_generated_at));
}

namespace {

const char* family_name(int i) {
  switch (i) {
    case 0: return "overall";
    case 1: return "content";
    case 2: return "effectiveness";
    default: return "hallucination";
  }
}

const IntervalEstimate& family_estimate(const TutorReport& t, int i) {
  switch (i) {
    case 0: return t.overall;
    case 1: return t.content;
    case 2: return t.effectiveness;
    default: return t.hallucination;
  }
}

}  // namespace

std::filesystem::path render_report(const BenchReport& report, ReportFormat format,
                                    const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::ostringstream out;
  std::filesystem::path path;

  switch (format) {
    case ReportFormat::Csv: {
      path = out_dir / "report.csv";
      out << "tutor,n_requested,n_evaluated,n_failed";
      for (int i = 0; i < 4; ++i)
        out << ',' << family_name(i) << "_mean," << family_name(i) << "_lo,"
            << family_name(i) << "_hi";
      out << ",hallucination_mean_of_types";
      std::vector<std::string> types;
      if (!report.tutors.empty())
        for (const auto& [type, rate] : report.tutors.front().hallucination_rates.per_type)
          types.push_back(type);
      for (const auto& type : types) out << ",rate_" << type;
      out << '\n';
      for (const auto& t : report.tutors) {
        out << t.tutor_model << ',' << t.n_requested << ',' << t.n_evaluated << ','
            << t.n_failed;
        for (int i = 0; i < 4; ++i) {
          const auto& e = family_estimate(t, i);
          out << ',' << format_double(e.mean) << ',' << format_double(e.lo) << ','
              << format_double(e.hi);
        }
        out << ',' << format_double(t.hallucination_rates.mean_of_types);
        for (const auto& type : types)
          out << ',' << format_double(t.hallucination_rates.per_type.at(type));
        out << '\n';
      }
      break;
    }
    case ReportFormat::PlotData: {
      path = out_dir / "plot_data.csv";
      out << "tutor,family,mean,lo,hi\n";
      for (const auto& t : report.tutors)
        for (int i = 0; i < 4; ++i) {
          const auto& e = family_estimate(t, i);
          out << t.tutor_model << ',' << family_name(i) << ',' << format_double(e.mean)
              << ',' << format_double(e.lo) << ',' << format_double(e.hi) << '\n';
        }
      break;
    }
    case ReportFormat::TableText: {
      path = out_dir / "report.txt";
      out << "evaluator: " << report.evaluator_id << "  rubric: " << report.rubric_version
          << "  mode: " << prompt_mode_name(report.mode) << "  seed: " << report.seed
          << "\n\n";
      out << std::left << std::setw(28) << "tutor" << std::right << std::setw(6) << "n";
      for (int i = 0; i < 4; ++i) out << std::setw(26) << family_name(i);
      out << '\n';
      out << std::fixed << std::setprecision(3);
      for (const auto& t : report.tutors) {
        out << std::left << std::setw(28) << t.tutor_model << std::right << std::setw(6)
            << t.n_evaluated;
        for (int i = 0; i < 4; ++i) {
          const auto& e = family_estimate(t, i);
          std::ostringstream cell;
          cell << std::fixed << std::setprecision(3) << e.mean << " [" << e.lo << ", "
               << e.hi << "]";
          out << std::setw(26) << cell.str();
        }
        out << '\n';
      }
      break;
    }
  }
  write_text_file(path, out.str());
  return path;
}

std::vector<std::map<std::string, std::string>> parse_bench_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line))
    throw Error(Errc::MalformedConfig, "bench CSV: missing header");
  std::vector<std::string> header;
  {
    std::istringstream h(line);
    std::string cell;
    while (std::getline(h, cell, ',')) header.push_back(cell);
  }
  std::vector<std::map<std::string, std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream c(line);
    std::string cell;
    while (std::getline(c, cell, ',')) cells.push_back(cell);
    if (cells.size() != header.size())
      throw Error(Errc::MalformedConfig, "bench CSV: ragged row");
    std::map<std::string, std::string> row;
    for (std::size_t i = 0; i < cells.size(); ++i) row[header[i]] = cells[i];
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace dean
