#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dean/corpus.hpp"
#include "dean/gate.hpp"
#include "dean/gateway.hpp"
#include "dean/metrics.hpp"
#include "dean/prompt.hpp"
#include "dean/rubric.hpp"

namespace dean {

struct BenchPlan {
  std::string run_id = "run";
  std::vector<ModelConfig> tutors;
  ModelConfig evaluator;
  std::filesystem::path corpus_path;
  int instances_per_tutor = 0;
  PromptMode mode = PromptMode::FewShot;
  std::uint64_t seed = 0;
  int bootstrap_resamples = 10000;
  int max_in_flight = 4;

  void validate() const;
  std::string to_json_string() const;
  static BenchPlan from_json_string(const std::string& text);
  static BenchPlan load(const std::filesystem::path& file);
};

/// Aggregates for one origin slice of a tutor's evaluations.
struct OriginAggregate {
  std::size_t n = 0;
  IntervalEstimate overall;
  double hallucination_mean_of_types = 0.0;

  bool operator==(const OriginAggregate&) const = default;
};

struct TutorReport {
  std::string tutor_model;
  std::size_t n_requested = 0;
  std::size_t n_evaluated = 0;
  std::size_t n_failed = 0;
  IntervalEstimate overall;
  IntervalEstimate content;
  IntervalEstimate effectiveness;
  IntervalEstimate hallucination;  // mean hallucination score per evaluation
  HallucinationRates hallucination_rates;
  std::map<std::string, OriginAggregate> by_origin;  // only when >1 origin

  bool operator==(const TutorReport&) const = default;
};

struct BenchReport {
  std::string rubric_version;
  std::string evaluator_id;
  std::uint64_t seed = 0;
  PromptMode mode = PromptMode::FewShot;
  std::string generated_at;  // empty for offline (replay/scripted) runs
  std::vector<TutorReport> tutors;

  bool operator==(const BenchReport&) const = default;
};

std::string bench_report_to_json(const BenchReport& report);
BenchReport bench_report_from_json(const std::string& text);

/// The seeded submission sample shared by every tutor in a run: ids are
/// sorted, shuffled with the plan seed, and the first instances_per_tutor
/// taken without replacement.
std::vector<std::string> sample_submissions(const Corpus& corpus, int instances,
                                            std::uint64_t seed);

/// Deterministic feedback id for a (tutor, submission) pair within a run.
std::string bench_feedback_id(const std::string& tutor_model,
                              const std::string& submission_id);

/// Runs the full benchmark: generate feedback for every tutor over the
/// shared submission sample, evaluate everything with the Dean evaluator,
/// persist all raw artifacts under run_root/<run_id>/ before aggregating,
/// and write report.json. Per-instance failures are recorded and excluded
/// from aggregates; a tutor losing more than half its instances aborts the
/// run (after persistence). Stages already persisted in the run directory
/// are reused, so an interrupted run resumes where it stopped.
BenchReport run_bench(const BenchPlan& plan, const RubricSpec& rubric,
                      const std::filesystem::path& run_root, Gateway& gateway);

/// Rebuilds the report purely from the artifacts persisted in the run
/// directory; byte-identical to the stored report.json.
std::string recompute_report_json(const BenchPlan& plan, const RubricSpec& rubric,
                                  const std::filesystem::path& run_dir);

enum class ReportFormat { TableText, Csv, PlotData };

/// Renders report.txt / report.csv / plot_data.csv next to report.json.
/// Plot data has one (mean, lo, hi) row per tutor per score family.
std::filesystem::path render_report(const BenchReport& report, ReportFormat format,
                                    const std::filesystem::path& out_dir);

/// Parses a report.csv back into (tutor, column -> value) rows; used to
/// verify the CSV round-trips exactly.
std::vector<std::map<std::string, std::string>> parse_bench_csv(const std::string& csv);

}  // namespace dean
