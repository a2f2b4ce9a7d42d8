#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dean/corpus.hpp"
#include "dean/gate.hpp"
#include "dean/rubric.hpp"

namespace dean {

struct DimensionMetrics {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::size_t support = 0;

  bool operator==(const DimensionMetrics&) const = default;
};

struct AspectMetrics {
  double accuracy = 0.0;
  double macro_f1 = 0.0;

  bool operator==(const AspectMetrics&) const = default;
};

/// Accuracy / macro-F1 per dimension, per aspect, and overall. Aspect and
/// overall values are unweighted means over member dimensions.
struct MetricsReport {
  std::map<std::string, DimensionMetrics> per_dimension;
  std::map<Aspect, AspectMetrics> per_aspect;
  AspectMetrics overall;

  bool operator==(const MetricsReport&) const = default;
};

/// Exact-match accuracy and macro-F1 of predicted labels against gold,
/// aligned by feedback_id. Per dimension, macro-F1 averages per-class F1
/// over the classes observed in pred or gold; classes absent from both are
/// excluded rather than scored 0.
MetricsReport score_metrics(const std::vector<LabelRecord>& pred,
                            const std::vector<LabelRecord>& gold,
                            const RubricSpec& rubric);

/// Items x categories count matrix for a fixed rater count per item.
struct AgreementInput {
  std::vector<std::vector<int>> counts;  // counts[i][j]: raters giving item i category j
  int raters_per_item = 0;

  void validate() const;
};

/// Fleiss' kappa with the standard per-item agreement and marginal category
/// proportions. Throws Error(DegenerateAgreement) when expected agreement
/// is 1 (all raters used a single category everywhere).
double fleiss_kappa(const AgreementInput& input);

enum class ScoreSelector { Overall, Content, Effectiveness };

const char* score_selector_name(ScoreSelector s);

struct IntervalEstimate {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  int n_resamples = 0;
  std::uint64_t seed = 0;

  bool operator==(const IntervalEstimate&) const = default;
};

/// Mean of the selected quality score with a seeded percentile-bootstrap
/// 95% interval.
IntervalEstimate mean_likert(const std::vector<EvaluationResult>& evaluations,
                             ScoreSelector selector, int n_resamples,
                             std::uint64_t seed);

struct HallucinationRates {
  std::map<std::string, double> per_type;  // fraction of evaluations flagging each type
  double mean_of_types = 0.0;

  bool operator==(const HallucinationRates&) const = default;
};

HallucinationRates hallucination_rates(const std::vector<EvaluationResult>& evaluations,
                                       const RubricSpec& rubric);

/// Table-shaped CSV: one row per evaluator, columns Overall / Content /
/// Effectiveness / Hallucinations x Accuracy / F1. Values round-trip
/// exactly through parse_metrics_csv.
std::string render_metrics_csv(
    const std::vector<std::pair<std::string, MetricsReport>>& rows);

std::vector<std::pair<std::string, MetricsReport>> parse_metrics_csv(
    const std::string& csv);

/// Full report (including per-dimension values) as JSON text.
std::string metrics_report_to_json(const MetricsReport& report);

/// Shortest decimal form that parses back to the identical double.
std::string format_double(double value);

}  // namespace dean
