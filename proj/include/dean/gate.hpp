#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dean/corpus.hpp"
#include "dean/gateway.hpp"
#include "dean/parser.hpp"
#include "dean/prompt.hpp"
#include "dean/rubric.hpp"

namespace dean {

/// A label plus the derived quality aggregates. Hallucination dimensions
/// never contribute to the quality means.
struct EvaluationResult {
  LabelRecord label;
  double overall_quality = 0.0;    // mean over Content + Effectiveness scores
  double content_mean = 0.0;
  double effectiveness_mean = 0.0;
  std::set<std::string> hallucination_flags;

  bool operator==(const EvaluationResult&) const = default;
};

struct GatePolicy {
  double min_overall_quality = 1.0;
  bool allow_hallucinations = false;
  int max_attempts = 3;
  int candidates_per_attempt = 1;

  void validate() const;
};

enum class Verdict { Accept, Reject };

enum class GateRule { HallucinationFlagged, BelowQualityThreshold };

const char* gate_rule_name(GateRule r);

struct GateReason {
  GateRule rule = GateRule::HallucinationFlagged;
  std::string detail;

  bool operator==(const GateReason&) const = default;
};

struct GateDecision {
  Verdict verdict = Verdict::Reject;
  std::vector<GateReason> reasons;  // non-empty iff Reject
  EvaluationResult evaluation;
};

EvaluationResult derive_evaluation(const LabelRecord& label, const RubricSpec& rubric);

/// Reject iff a hallucination is flagged (and not allowed) or the overall
/// quality falls below the policy threshold; every violated rule is listed.
GateDecision gate(const EvaluationResult& evaluation, const GatePolicy& policy);

/// One evaluator round-trip for a feedback text: prompt, complete, parse,
/// derive. On a fatal parse failure the evaluator is re-asked once with the
/// parse errors appended; the parser itself stays pure.
struct EvaluationOutcome {
  std::optional<EvaluationResult> result;
  std::string raw_response;
  std::vector<ParseIssue> issues;
  bool repaired = false;     // second ask was needed
  std::string error_category;  // gateway error, if any
  std::string error_message;

  bool ok() const { return result.has_value(); }
};

EvaluationOutcome evaluate_feedback(const Assignment& assignment,
                                    const Submission& submission,
                                    const FeedbackInstance& feedback,
                                    const RubricSpec& rubric, PromptMode mode,
                                    const ModelConfig& evaluator, Gateway& gateway,
                                    const PromptTemplates& templates = {});

/// One row of the gate-loop audit trail; every generated candidate appears
/// exactly once, in (attempt, candidate) order.
struct CandidateRecord {
  int attempt = 0;          // 1-based
  int candidate = 0;        // 1-based within the attempt
  std::string feedback_text;
  std::optional<GateDecision> decision;  // absent when generation/evaluation failed
  std::string error_category;
  std::string error_message;
  std::vector<ParseIssue> parse_issues;
};

struct GateLoopResult {
  std::optional<FeedbackInstance> accepted;    // feedback that passed the gate
  std::optional<GateDecision> accepted_decision;
  int accepted_attempt = 0;
  std::vector<CandidateRecord> trail;

  bool ok() const { return accepted.has_value(); }
};

/// The Dean protocol: per attempt, generate candidates_per_attempt feedback
/// texts with the tutor, evaluate each, and accept the highest-quality
/// passing candidate (ties broken by generation order). Stops at the first
/// acceptance; after max_attempts the full audit trail is returned as a
/// failure. Performs at most max_attempts * candidates_per_attempt tutor
/// calls and as many evaluator calls (plus at most one parse-repair ask per
/// candidate).
GateLoopResult gate_loop(const Assignment& assignment, const Submission& submission,
                         const ModelConfig& tutor, const ModelConfig& evaluator,
                         const GatePolicy& policy, const RubricSpec& rubric,
                         PromptMode mode, Gateway& gateway,
                         const PromptTemplates& templates = {}, int max_in_flight = 4);

/// Serializes a trail to JSONL for the run store / audit logs.
std::string trail_to_jsonl(const std::vector<CandidateRecord>& trail);

}  // namespace dean
