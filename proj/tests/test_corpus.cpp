#include "doctest.h"

#include "dean/corpus.hpp"
#include "dean/error.hpp"
#include "test_support.hpp"

using namespace dean;

TEST_CASE("fixture corpus loads with expected counts") {
  const Corpus c = load_corpus(test::fixture_path("corpus"));
  CHECK(c.assignments().size() == 4);
  CHECK(c.submissions().size() == 8);
  CHECK(c.feedback().size() == 16);
  CHECK(c.find_submission("s01-1") != nullptr);
  CHECK(c.assignment_of_submission("s01-1")->id == "a01");
}

TEST_CASE("save then load round-trips exactly") {
  const RubricSpec rubric = default_rubric();
  Corpus c = load_corpus(test::fixture_path("corpus"));
  c.add_label(test::make_label(rubric, "f-tutor-alpha-s01-1", 2, 1, 0, "coder-1"));
  LabelRecord with_explanation =
      test::make_label(rubric, "f-tutor-beta-s01-1", 1, 0, 1, "coder-2");
  with_explanation.explanation = "the feed up label is borderline";
  c.add_label(with_explanation);
  c.validate(&rubric);

  test::TempDir tmp;
  save_corpus(c, tmp.path());
  const Corpus reloaded = load_corpus(tmp.path(), &rubric);
  CHECK(reloaded == c);

  // Byte-level determinism of persistence.
  test::TempDir tmp2;
  save_corpus(reloaded, tmp2.path());
  for (const auto* name :
       {"assignments.jsonl", "submissions.jsonl", "feedback.jsonl", "labels.jsonl"})
    CHECK(test::read_file(tmp.path() / name) == test::read_file(tmp2.path() / name));
}

TEST_CASE("referential and score validation") {
  const RubricSpec rubric = default_rubric();

  SUBCASE("dangling submission reference") {
    Corpus c;
    c.add_assignment({"a", "c", "desc"});
    c.add_submission({"s", "missing", "body", ""});
    CHECK_THROWS_AS(c.validate(), Error);
  }
  SUBCASE("likert score of 3 is invalid") {
    Corpus c = test::tiny_corpus();
    LabelRecord label = test::make_label(rubric, "f1", 2, 1, 0);
    label.scores["alignment_with_goals"] = 3;
    c.add_label(label);
    try {
      c.validate(&rubric);
      FAIL("expected InvalidScore");
    } catch (const Error& e) {
      CHECK(e.category() == Errc::InvalidScore);
    }
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_corpus("/nonexistent/dir"), Error);
  }
}

TEST_CASE("stratified split balances strata against the global target") {
  const RubricSpec rubric = default_rubric();
  Corpus c;
  c.add_assignment({"a", "c", "desc"});
  c.add_submission({"s", "a", "body", ""});
  std::vector<LabelRecord> labels;
  for (int t = 0; t < 8; ++t) {
    for (int i = 0; i < 25; ++i) {
      FeedbackInstance f;
      f.id = "f-" + std::to_string(t) + "-" + std::to_string(i);
      f.submission_id = "s";
      f.tutor_model = "model-" + std::to_string(t);
      f.text = "text";
      c.add_feedback(f);
      labels.push_back(test::make_label(rubric, f.id, 1, 1, 0));
    }
  }

  const SplitAssignment split = stratified_split(labels, c, 0.5, 7);
  CHECK(split.side.size() == 200);
  CHECK(split.train_count() == 100);
  CHECK(split.test_count() == 100);

  // Every stratum lands on 12/13 or 13/12.
  std::map<std::string, int> train_per_model;
  for (const auto& [id, side] : split.side) {
    const auto* f = c.find_feedback(id);
    if (side == SplitSide::Train) ++train_per_model[f->tutor_model];
  }
  for (const auto& [model, n] : train_per_model) {
    CHECK(n >= 12);
    CHECK(n <= 13);
  }

  SUBCASE("deterministic given the seed") {
    CHECK(stratified_split(labels, c, 0.5, 7) == split);
    CHECK(stratified_split(labels, c, 0.5, 8) != split);
  }
  SUBCASE("fraction bounds") {
    CHECK_THROWS_AS(stratified_split(labels, c, 1.0, 7), Error);
    CHECK_THROWS_AS(stratified_split(labels, c, 0.0, 7), Error);
    try {
      stratified_split({}, c, 0.5, 7);
      FAIL("expected EmptyInput");
    } catch (const Error& e) {
      CHECK(e.category() == Errc::EmptyInput);
    }
  }
  SUBCASE("split file round-trip") {
    test::TempDir tmp;
    save_split(split, tmp.path() / "split.jsonl");
    CHECK(load_split(tmp.path() / "split.jsonl") == split);
  }
}

TEST_CASE("stratified split proportion property on uneven strata") {
  const RubricSpec rubric = default_rubric();
  Corpus c;
  c.add_assignment({"a", "c", "desc"});
  c.add_submission({"s", "a", "body", ""});
  std::vector<LabelRecord> labels;
  const std::vector<int> sizes{3, 7, 11, 25, 1};
  for (std::size_t t = 0; t < sizes.size(); ++t) {
    for (int i = 0; i < sizes[t]; ++i) {
      FeedbackInstance f;
      f.id = "g-" + std::to_string(t) + "-" + std::to_string(i);
      f.submission_id = "s";
      f.tutor_model = "m-" + std::to_string(t);
      f.text = "text";
      c.add_feedback(f);
      labels.push_back(test::make_label(rubric, f.id, 1, 1, 0));
    }
  }
  for (double fraction : {0.3, 0.5, 0.8}) {
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
      const SplitAssignment split = stratified_split(labels, c, fraction, seed);
      CHECK(split.side.size() == labels.size());
      std::map<std::string, int> train_per_model, total_per_model;
      for (const auto& [id, side] : split.side) {
        const auto* f = c.find_feedback(id);
        ++total_per_model[f->tutor_model];
        if (side == SplitSide::Train) ++train_per_model[f->tutor_model];
      }
      for (const auto& [model, total] : total_per_model) {
        const double exact = fraction * total;
        CHECK(std::abs(train_per_model[model] - exact) < 1.0);
      }
    }
  }
}
