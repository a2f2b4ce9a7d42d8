#include "doctest.h"

#include <array>
#include <cstdio>

#include "dean/corpus.hpp"
#include "dean/gateway.hpp"
#include "dean/metrics.hpp"
#include "dean/parser.hpp"
#include "dean/prompt.hpp"
#include "test_support.hpp"

using namespace dean;

namespace {

struct CommandResult {
  int exit_code = -1;
  std::string output;  // stdout only; stderr routed to /dev/null
};

CommandResult run_cli(const std::string& args) {
  const std::string command = std::string(DEAN_CLI_PATH) + " " + args + " 2>/dev/null";
  std::array<char, 4096> buffer{};
  CommandResult result;
  FILE* pipe = popen(command.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::size_t n = 0;
  while ((n = fread(buffer.data(), 1, buffer.size(), pipe)) > 0)
    result.output.append(buffer.data(), n);
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

}  // namespace

TEST_CASE("kappa subcommand prints the fixture value") {
  test::TempDir tmp;
  test::write_file(tmp.path() / "matrix.csv", "3,0\n0,3\n2,1\n1,2\n");
  const auto result = run_cli("kappa --matrix " + (tmp.path() / "matrix.csv").string());
  CHECK(result.exit_code == 0);
  CHECK(result.output == "0.3333\n");
}

TEST_CASE("kappa rejects a degenerate matrix with a machine-readable error") {
  test::TempDir tmp;
  test::write_file(tmp.path() / "matrix.csv", "3,0\n3,0\n");
  const auto result = run_cli("kappa --matrix " + (tmp.path() / "matrix.csv").string());
  CHECK(result.exit_code == 3);
}

TEST_CASE("metrics subcommand with pred=gold prints an all-ones table") {
  const RubricSpec rubric = default_rubric();
  test::TempDir tmp;
  std::vector<LabelRecord> gold;
  for (int i = 0; i < 6; ++i)
    gold.push_back(test::make_label(rubric, "fb" + std::to_string(i), i % 3, i % 2, 0));
  save_labels(gold, tmp.path() / "gold.jsonl");
  save_labels(gold, tmp.path() / "pred.jsonl");

  const auto result = run_cli("metrics --pred " + (tmp.path() / "pred.jsonl").string() +
                              " --gold " + (tmp.path() / "gold.jsonl").string() +
                              " --evaluator-name identity --stdout");
  CHECK(result.exit_code == 0);
  const auto rows = parse_metrics_csv(result.output);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].first == "identity");
  CHECK(rows[0].second.overall.accuracy == 1.0);
  CHECK(rows[0].second.overall.macro_f1 == 1.0);
}

TEST_CASE("rubric dump round-trips through load_rubric") {
  const auto result = run_cli("rubric --dump --stdout");
  CHECK(result.exit_code == 0);
  CHECK(load_rubric(result.output) == default_rubric());
}

TEST_CASE("split subcommand writes a loadable split") {
  const RubricSpec rubric = default_rubric();
  test::TempDir tmp;
  Corpus corpus = load_corpus(test::fixture_path("corpus"));
  std::vector<LabelRecord> labels;
  for (const auto& f : corpus.feedback())
    labels.push_back(test::make_label(rubric, f.id, 1, 1, 0));
  save_labels(labels, tmp.path() / "labels.jsonl");

  const auto result =
      run_cli("split --corpus " + test::fixture_path("corpus").string() + " --labels " +
              (tmp.path() / "labels.jsonl").string() + " --fraction 0.5 --seed 3 --out " +
              (tmp.path() / "split.jsonl").string());
  CHECK(result.exit_code == 0);
  const SplitAssignment split = load_split(tmp.path() / "split.jsonl");
  CHECK(split.side.size() == 16);
  CHECK(split.train_count() == 8);
}

TEST_CASE("evaluate over cassettes produces labels consumable by metrics") {
  const RubricSpec rubric = default_rubric();
  test::TempDir tmp;
  const Corpus corpus = load_corpus(test::fixture_path("corpus"));

  // Evaluate two fixture feedback instances against recorded cassettes.
  std::vector<FeedbackInstance> feedback{corpus.feedback()[0], corpus.feedback()[1]};
  save_feedback_file(feedback, tmp.path() / "feedback.jsonl");

  CassetteStore store(tmp.path() / "cassettes");
  for (const auto& f : feedback) {
    const auto* sub = corpus.find_submission(f.submission_id);
    const auto* asg = corpus.assignment_of_submission(f.submission_id);
    const EvalPrompt prompt = build_eval_prompt(*asg, *sub, f, rubric, PromptMode::FewShot);
    store.store("dean-model", prompt.text,
                serialize_labels(test::make_label(rubric, "x", 2, 1, 0), rubric));
  }

  ModelConfig evaluator;
  evaluator.provider = Provider::Replay;
  evaluator.model_id = "dean-model";
  test::write_file(tmp.path() / "evaluator.json", evaluator.to_json_string());

  const auto eval_result = run_cli(
      "evaluate --corpus " + test::fixture_path("corpus").string() + " --feedback " +
      (tmp.path() / "feedback.jsonl").string() + " --evaluator " +
      (tmp.path() / "evaluator.json").string() + " --mode few-shot --cassettes " +
      (tmp.path() / "cassettes").string() + " --out-labels " +
      (tmp.path() / "labels.jsonl").string());
  CHECK(eval_result.exit_code == 0);

  const auto labels = load_labels(tmp.path() / "labels.jsonl");
  REQUIRE(labels.size() == 2);
  CHECK(labels[0].rater == "dean-model");

  // Labels file feeds straight into `metrics` as both pred and gold.
  const auto metrics_result =
      run_cli("metrics --pred " + (tmp.path() / "labels.jsonl").string() + " --gold " +
              (tmp.path() / "labels.jsonl").string() + " --stdout");
  CHECK(metrics_result.exit_code == 0);
  CHECK(metrics_result.output.find(",1,1,1,1,1,1,1,1") != std::string::npos);
}

TEST_CASE("gate subcommand runs the loop over cassettes") {
  const RubricSpec rubric = default_rubric();
  test::TempDir tmp;
  const Corpus corpus = load_corpus(test::fixture_path("corpus"));
  const Submission* sub = corpus.find_submission("s01-1");
  const Assignment* asg = corpus.assignment_of_submission("s01-1");

  const std::string feedback_text = "Strong feedback tied to the goals.";
  CassetteStore store(tmp.path() / "cassettes");
  store.store("tutor-model", build_tutor_prompt(*asg, *sub), feedback_text);
  FeedbackInstance f;
  f.id = "any";
  f.submission_id = sub->id;
  f.tutor_model = "tutor-model";
  f.text = feedback_text;
  store.store("dean-model",
              build_eval_prompt(*asg, *sub, f, rubric, PromptMode::FewShot).text,
              serialize_labels(test::make_label(rubric, "x", 2, 1, 0), rubric));

  ModelConfig tutor;
  tutor.provider = Provider::Replay;
  tutor.model_id = "tutor-model";
  test::write_file(tmp.path() / "tutor.json", tutor.to_json_string());
  ModelConfig evaluator = tutor;
  evaluator.model_id = "dean-model";
  test::write_file(tmp.path() / "evaluator.json", evaluator.to_json_string());

  const auto result = run_cli(
      "gate --corpus " + test::fixture_path("corpus").string() +
      " --submission-id s01-1 --tutor " + (tmp.path() / "tutor.json").string() +
      " --evaluator " + (tmp.path() / "evaluator.json").string() +
      " --mode few-shot --cassettes " + (tmp.path() / "cassettes").string() + " --out " +
      (tmp.path() / "decision.json").string() + " --out-trail " +
      (tmp.path() / "trail.jsonl").string());
  CHECK(result.exit_code == 0);
  const std::string decision = test::read_file(tmp.path() / "decision.json");
  CHECK(decision.find("\"accepted\": true") != std::string::npos);
  CHECK(decision.find(feedback_text) != std::string::npos);
  CHECK(test::read_file(tmp.path() / "trail.jsonl").find("\"verdict\":\"accept\"") !=
        std::string::npos);
}

TEST_CASE("identical seeded invocations write byte-identical outputs") {
  const RubricSpec rubric = default_rubric();
  test::TempDir tmp;
  Corpus corpus = load_corpus(test::fixture_path("corpus"));
  std::vector<LabelRecord> labels;
  for (const auto& f : corpus.feedback())
    labels.push_back(test::make_label(rubric, f.id, 2, 0, 0));
  save_labels(labels, tmp.path() / "labels.jsonl");

  const std::string base = "split --corpus " + test::fixture_path("corpus").string() +
                           " --labels " + (tmp.path() / "labels.jsonl").string() +
                           " --fraction 0.5 --seed 11 --out ";
  CHECK(run_cli(base + (tmp.path() / "a.jsonl").string()).exit_code == 0);
  CHECK(run_cli(base + (tmp.path() / "b.jsonl").string()).exit_code == 0);
  CHECK(test::read_file(tmp.path() / "a.jsonl") == test::read_file(tmp.path() / "b.jsonl"));
}

TEST_CASE("unknown flags exit nonzero") {
  const auto result = run_cli("kappa --definitely-not-a-flag x");
  CHECK(result.exit_code != 0);
}

TEST_CASE("missing input files map to the documented exit code") {
  const auto result = run_cli("kappa --matrix /nonexistent/matrix.csv");
  CHECK(result.exit_code == 4);
}
