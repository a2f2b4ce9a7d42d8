#include "doctest.h"

#include <cmath>

#include "dean/error.hpp"
#include "dean/metrics.hpp"
#include "dean/rng.hpp"
#include "test_support.hpp"

using namespace dean;

namespace {

// ---------------------------------------------------------------------------
// Independent brute-force oracle: per-(instance, dimension) tallies with
// explicit per-class confusion loops. Kept deliberately naive and separate
// from the library's implementation path.
// ---------------------------------------------------------------------------
struct OracleDim {
  double accuracy;
  double macro_f1;
};

OracleDim oracle_dimension(const std::vector<int>& pred, const std::vector<int>& gold,
                           const std::vector<int>& classes) {
  int match = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (pred[i] == gold[i]) ++match;

  double f1_sum = 0.0;
  int f1_classes = 0;
  for (int c : classes) {
    int tp = 0, fp = 0, fn = 0;
    bool seen = false;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      if (pred[i] == c || gold[i] == c) seen = true;
      if (pred[i] == c && gold[i] == c) ++tp;
      if (pred[i] == c && gold[i] != c) ++fp;
      if (pred[i] != c && gold[i] == c) ++fn;
    }
    if (!seen) continue;  // class absent from both sides: excluded
    ++f1_classes;
    const double denom = 2.0 * tp + fp + fn;
    f1_sum += denom == 0.0 ? 0.0 : 2.0 * tp / denom;
  }
  return {static_cast<double>(match) / static_cast<double>(pred.size()),
          f1_classes ? f1_sum / f1_classes : 0.0};
}

std::pair<std::vector<LabelRecord>, std::vector<LabelRecord>> random_label_sets(
    const RubricSpec& rubric, Rng& rng, std::size_t max_instances) {
  const std::size_t n = 1 + rng.below(max_instances);
  std::vector<LabelRecord> pred, gold;
  for (std::size_t i = 0; i < n; ++i) {
    LabelRecord p, g;
    p.feedback_id = g.feedback_id = "fb-" + std::to_string(i);
    p.rater = "pred";
    g.rater = "gold";
    for (const auto& dim : rubric.dimensions()) {
      const auto scores = valid_scores(dim.scale);
      // Correlated draws so accuracy is not pinned near chance.
      const int gv = static_cast<int>(scores[rng.below(scores.size())]);
      const int pv = rng.below(10) < 6 ? gv : static_cast<int>(scores[rng.below(scores.size())]);
      g.scores[dim.id] = gv;
      p.scores[dim.id] = pv;
    }
    pred.push_back(std::move(p));
    gold.push_back(std::move(g));
  }
  return {pred, gold};
}

}  // namespace

TEST_CASE("identical predictions score 1.0 everywhere") {
  const RubricSpec rubric = default_rubric();
  std::vector<LabelRecord> gold;
  Rng rng(11);
  for (int i = 0; i < 20; ++i) {
    LabelRecord g;
    g.feedback_id = "fb-" + std::to_string(i);
    g.rater = "gold";
    for (const auto& dim : rubric.dimensions())
      g.scores[dim.id] = static_cast<int>(rng.below(dim.scale == Scale::Likert3 ? 3 : 2));
    gold.push_back(g);
  }
  std::vector<LabelRecord> pred = gold;
  for (auto& p : pred) p.rater = "pred";

  const MetricsReport report = score_metrics(pred, gold, rubric);
  for (const auto& [id, m] : report.per_dimension) {
    CHECK(m.accuracy == 1.0);
    CHECK(m.macro_f1 == 1.0);
    CHECK(m.support == 20);
  }
  CHECK(report.overall.accuracy == 1.0);
  CHECK(report.overall.macro_f1 == 1.0);
}

TEST_CASE("hand-computed binary confusion") {
  // One binary dimension, TP=2 FP=1 FN=1 TN=6.
  const std::string config = R"({
    "version": "t",
    "dimensions": [{
      "id": "flag", "name": "Flag", "aspect": "hallucination", "scale": "binary",
      "description": "d", "score_descriptors": {"0": "no", "1": "yes"}
    }]
  })";
  const RubricSpec rubric = load_rubric(config);

  const std::vector<int> pred{1, 1, 1, 0, 0, 0, 0, 0, 0, 0};
  const std::vector<int> gold{1, 1, 0, 1, 0, 0, 0, 0, 0, 0};
  std::vector<LabelRecord> pred_labels, gold_labels;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    LabelRecord p{"fb" + std::to_string(i), "p", {{"flag", pred[i]}}, std::nullopt};
    LabelRecord g{"fb" + std::to_string(i), "g", {{"flag", gold[i]}}, std::nullopt};
    pred_labels.push_back(p);
    gold_labels.push_back(g);
  }

  const MetricsReport report = score_metrics(pred_labels, gold_labels, rubric);
  CHECK(report.per_dimension.at("flag").accuracy == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(report.per_dimension.at("flag").macro_f1 ==
        doctest::Approx(16.0 / 21.0).epsilon(1e-12));
}

TEST_CASE("score_metrics equals the brute-force oracle on random cases") {
  const RubricSpec rubric = default_rubric();
  Rng rng(4242);
  for (int trial = 0; trial < 60; ++trial) {
    const auto [pred, gold] = random_label_sets(rubric, rng, 50);
    const MetricsReport report = score_metrics(pred, gold, rubric);

    double acc_sum = 0.0, f1_sum = 0.0;
    for (const auto& dim : rubric.dimensions()) {
      std::vector<int> p, g;
      for (std::size_t i = 0; i < pred.size(); ++i) {
        p.push_back(pred[i].scores.at(dim.id));
        g.push_back(gold[i].scores.at(dim.id));
      }
      const OracleDim expected = oracle_dimension(p, g, valid_scores(dim.scale));
      const auto& actual = report.per_dimension.at(dim.id);
      CHECK(std::abs(actual.accuracy - expected.accuracy) < 1e-12);
      CHECK(std::abs(actual.macro_f1 - expected.macro_f1) < 1e-12);
      acc_sum += expected.accuracy;
      f1_sum += expected.macro_f1;
    }
    CHECK(std::abs(report.overall.accuracy - acc_sum / 15.0) < 1e-12);
    CHECK(std::abs(report.overall.macro_f1 - f1_sum / 15.0) < 1e-12);
  }
}

TEST_CASE("permutation invariance of score_metrics") {
  const RubricSpec rubric = default_rubric();
  Rng rng(99);
  auto [pred, gold] = random_label_sets(rubric, rng, 30);
  const MetricsReport before = score_metrics(pred, gold, rubric);
  rng.shuffle(pred);
  rng.shuffle(gold);
  CHECK(score_metrics(pred, gold, rubric) == before);
}

TEST_CASE("misaligned and empty inputs are rejected") {
  const RubricSpec rubric = default_rubric();
  std::vector<LabelRecord> pred{test::make_label(rubric, "a", 1, 1, 0)};
  std::vector<LabelRecord> gold{test::make_label(rubric, "b", 1, 1, 0)};
  CHECK_THROWS_AS(score_metrics(pred, gold, rubric), Error);
  CHECK_THROWS_AS(score_metrics({}, {}, rubric), Error);
}

TEST_CASE("fleiss kappa fixtures") {
  SUBCASE("hand-computed 4-item fixture gives 1/3") {
    AgreementInput input{{{3, 0}, {0, 3}, {2, 1}, {1, 2}}, 3};
    CHECK(fleiss_kappa(input) == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
  }
  SUBCASE("perfect disagreement of two raters gives -1") {
    AgreementInput input{{{1, 1}, {1, 1}}, 2};
    CHECK(fleiss_kappa(input) == doctest::Approx(-1.0).epsilon(1e-12));
  }
  SUBCASE("perfect agreement across used categories gives 1") {
    AgreementInput input{{{3, 0}, {0, 3}, {3, 0}}, 3};
    CHECK(fleiss_kappa(input) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("single-category saturation is degenerate") {
    AgreementInput input{{{3, 0}, {3, 0}}, 3};
    try {
      fleiss_kappa(input);
      FAIL("expected DegenerateAgreement");
    } catch (const Error& e) {
      CHECK(e.category() == Errc::DegenerateAgreement);
    }
  }
  SUBCASE("ragged or inconsistent rows are rejected") {
    CHECK_THROWS_AS(fleiss_kappa({{{2, 0}, {1, 1, 1}}, 2}), Error);
    CHECK_THROWS_AS(fleiss_kappa({{{2, 1}}, 2}), Error);
    CHECK_THROWS_AS(fleiss_kappa({{}, 3}), Error);
  }
}

TEST_CASE("fleiss kappa stays within [-1, 1] on random matrices") {
  Rng rng(1234);
  int evaluated = 0;
  while (evaluated < 1000) {
    const std::size_t items = 1 + rng.below(12);
    const std::size_t categories = 2 + rng.below(4);
    const int raters = 2 + static_cast<int>(rng.below(5));
    AgreementInput input;
    input.raters_per_item = raters;
    for (std::size_t i = 0; i < items; ++i) {
      std::vector<int> row(categories, 0);
      for (int r = 0; r < raters; ++r) ++row[rng.below(categories)];
      input.counts.push_back(std::move(row));
    }
    try {
      const double kappa = fleiss_kappa(input);
      CHECK(kappa >= -1.0 - 1e-12);
      CHECK(kappa <= 1.0 + 1e-12);
      ++evaluated;
    } catch (const Error& e) {
      CHECK(e.category() == Errc::DegenerateAgreement);
    }
  }
}

TEST_CASE("kappa is 1 iff every row is single-category (with >1 category used)") {
  Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t items = 2 + rng.below(8);
    const std::size_t categories = 2 + rng.below(3);
    AgreementInput input;
    input.raters_per_item = 3;
    bool all_unanimous = true;
    std::set<std::size_t> used;
    for (std::size_t i = 0; i < items; ++i) {
      std::vector<int> row(categories, 0);
      if (rng.below(2) == 0) {
        row[rng.below(categories)] = 3;
      } else {
        // Split 2+1 across two distinct categories.
        const std::size_t a = rng.below(categories);
        const std::size_t b = (a + 1 + rng.below(categories - 1)) % categories;
        row[a] = 2;
        row[b] = 1;
        all_unanimous = false;
      }
      for (std::size_t j = 0; j < categories; ++j)
        if (row[j] > 0) used.insert(j);
      input.counts.push_back(std::move(row));
    }
    if (used.size() < 2) continue;
    const double kappa = fleiss_kappa(input);
    if (all_unanimous)
      CHECK(kappa == doctest::Approx(1.0).epsilon(1e-12));
    else
      CHECK(kappa < 1.0);
  }
}

TEST_CASE("bootstrap interval basics") {
  const RubricSpec rubric = default_rubric();

  SUBCASE("zero variance collapses the interval") {
    std::vector<EvaluationResult> evals;
    for (int i = 0; i < 10; ++i)
      evals.push_back(derive_evaluation(test::make_label(rubric, "f", 2, 1, 0), rubric));
    const IntervalEstimate est = mean_likert(evals, ScoreSelector::Overall, 2000, 42);
    CHECK(est.mean == doctest::Approx(17.0 / 12.0));
    CHECK(est.lo == est.mean);
    CHECK(est.hi == est.mean);
  }

  SUBCASE("interval contains the mean and is seed-deterministic") {
    std::vector<EvaluationResult> evals;
    Rng rng(3);
    for (int i = 0; i < 40; ++i) {
      const int c = static_cast<int>(rng.below(3));
      const int e = static_cast<int>(rng.below(2));
      evals.push_back(derive_evaluation(test::make_label(rubric, "f", c, e, 0), rubric));
    }
    const IntervalEstimate a = mean_likert(evals, ScoreSelector::Overall, 3000, 7);
    const IntervalEstimate b = mean_likert(evals, ScoreSelector::Overall, 3000, 7);
    const IntervalEstimate c = mean_likert(evals, ScoreSelector::Overall, 3000, 8);
    CHECK(a == b);
    CHECK(a != c);
    CHECK(a.lo <= a.mean);
    CHECK(a.mean <= a.hi);
    CHECK(a.lo < a.hi);
  }

  SUBCASE("width shrinks as the sample grows fourfold") {
    Rng rng(5);
    auto build = [&](std::size_t n) {
      std::vector<EvaluationResult> evals;
      for (std::size_t i = 0; i < n; ++i) {
        const int c = static_cast<int>(rng.below(3));
        const int e = static_cast<int>(rng.below(2));
        evals.push_back(derive_evaluation(test::make_label(rubric, "f", c, e, 0), rubric));
      }
      return evals;
    };
    const auto small = mean_likert(build(50), ScoreSelector::Overall, 4000, 9);
    const auto large = mean_likert(build(200), ScoreSelector::Overall, 4000, 9);
    CHECK(large.hi - large.lo < small.hi - small.lo);
  }

  SUBCASE("empty input is rejected") {
    CHECK_THROWS_AS(mean_likert({}, ScoreSelector::Overall, 100, 1), Error);
  }
}

TEST_CASE("hallucination rates") {
  const RubricSpec rubric = default_rubric();

  SUBCASE("no flags anywhere") {
    std::vector<EvaluationResult> evals;
    for (int i = 0; i < 10; ++i)
      evals.push_back(derive_evaluation(test::make_label(rubric, "f", 1, 1, 0), rubric));
    const auto rates = hallucination_rates(evals, rubric);
    for (const auto& [type, rate] : rates.per_type) CHECK(rate == 0.0);
    CHECK(rates.mean_of_types == 0.0);
  }

  SUBCASE("per-type flag counts 30/24/12 over 200") {
    std::vector<EvaluationResult> evals;
    for (int i = 0; i < 200; ++i) {
      LabelRecord label = test::make_label(rubric, "f", 1, 1, 0);
      if (i < 30) label.scores["input_conflicting"] = 1;
      if (i < 24) label.scores["context_conflicting"] = 1;
      if (i < 12) label.scores["fact_conflicting"] = 1;
      evals.push_back(derive_evaluation(label, rubric));
    }
    const auto rates = hallucination_rates(evals, rubric);
    CHECK(rates.per_type.at("input_conflicting") == doctest::Approx(0.15).epsilon(1e-12));
    CHECK(rates.per_type.at("context_conflicting") == doctest::Approx(0.12).epsilon(1e-12));
    CHECK(rates.per_type.at("fact_conflicting") == doctest::Approx(0.06).epsilon(1e-12));
    CHECK(rates.mean_of_types == doctest::Approx(0.11).epsilon(1e-12));
  }

  SUBCASE("saturation") {
    std::vector<EvaluationResult> evals;
    for (int i = 0; i < 5; ++i)
      evals.push_back(derive_evaluation(test::make_label(rubric, "f", 1, 1, 1), rubric));
    const auto rates = hallucination_rates(evals, rubric);
    for (const auto& [type, rate] : rates.per_type) CHECK(rate == 1.0);
    CHECK(rates.mean_of_types == 1.0);
  }
}

TEST_CASE("side-by-side tutor comparison fixture") {
  // Report-format fixture: two headline tutor means rendered side by side.
  // Values are format fixtures, not computed claims.
  const RubricSpec rubric = default_rubric();
  std::vector<EvaluationResult> gemini, gpt;
  // 1.09 and 1.08 as zero-variance fixtures.
  for (int i = 0; i < 4; ++i) {
    EvaluationResult a;
    a.label = test::make_label(rubric, "f", 1, 1, 0);
    a.overall_quality = 1.09;
    gemini.push_back(a);
    EvaluationResult b = a;
    b.overall_quality = 1.08;
    gpt.push_back(b);
  }
  const auto est_gemini = mean_likert(gemini, ScoreSelector::Overall, 500, 1);
  const auto est_gpt = mean_likert(gpt, ScoreSelector::Overall, 500, 1);
  CHECK(est_gemini.mean == doctest::Approx(1.09));
  CHECK(est_gpt.mean == doctest::Approx(1.08));
  CHECK(est_gemini.mean > est_gpt.mean);
}

TEST_CASE("metrics csv round-trips the table grid exactly") {
  MetricsReport fixture;
  fixture.overall = {0.798, 0.794};
  fixture.per_aspect[Aspect::Content] = {0.737, 0.532};
  fixture.per_aspect[Aspect::Effectiveness] = {0.843, 0.725};
  fixture.per_aspect[Aspect::Hallucination] = {0.813, 0.679};

  const std::string csv = render_metrics_csv({{"gpt-4.1-finetuned-plain", fixture}});
  const auto parsed = parse_metrics_csv(csv);
  REQUIRE(parsed.size() == 1);
  CHECK(parsed[0].first == "gpt-4.1-finetuned-plain");
  CHECK(parsed[0].second == fixture);
  CHECK(render_metrics_csv(parsed) == csv);

  // The header carries the full grid.
  CHECK(csv.rfind("evaluator,overall_accuracy,overall_f1,content_accuracy,", 0) == 0);
}

TEST_CASE("format_double survives value round-trips") {
  Rng rng(2);
  for (int i = 0; i < 500; ++i) {
    const double v = rng.unit() * (i % 2 ? 1.0 : 1e-6);
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(0.798) == "0.798");
}
