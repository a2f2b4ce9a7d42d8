#include "dean/gate.hpp"

#include <sstream>

#include "json.hpp"

#include "dean/error.hpp"

namespace dean {

const char* gate_rule_name(GateRule r) {
  switch (r) {
    case GateRule::HallucinationFlagged: return "HallucinationFlagged";
    case GateRule::BelowQualityThreshold: return "BelowQualityThreshold";
  }
  return "HallucinationFlagged";
}

void GatePolicy::validate() const {
  if (max_attempts < 1)
    throw Error(Errc::MalformedConfig, "gate policy: max_attempts must be >= 1");
  if (candidates_per_attempt < 1)
    throw Error(Errc::MalformedConfig, "gate policy: candidates_per_attempt must be >= 1");
}

EvaluationResult derive_evaluation(const LabelRecord& label, const RubricSpec& rubric) {
  validate_label(label, rubric);
  EvaluationResult result;
  result.label = label;

  double content_sum = 0.0, effectiveness_sum = 0.0;
  std::size_t content_n = 0, effectiveness_n = 0;
  for (const auto& dim : rubric.dimensions()) {
    const int score = label.scores.at(dim.id);
    switch (dim.aspect) {
      case Aspect::Content:
        content_sum += score;
        ++content_n;
        break;
      case Aspect::Effectiveness:
        effectiveness_sum += score;
        ++effectiveness_n;
        break;
      case Aspect::Hallucination:
        if (score == 1) result.hallucination_flags.insert(dim.id);
        break;
    }
  }
  result.content_mean = content_n ? content_sum / static_cast<double>(content_n) : 0.0;
  result.effectiveness_mean =
      effectiveness_n ? effectiveness_sum / static_cast<double>(effectiveness_n) : 0.0;
  const std::size_t quality_n = content_n + effectiveness_n;
  result.overall_quality =
      quality_n ? (content_sum + effectiveness_sum) / static_cast<double>(quality_n) : 0.0;
  return result;
}

GateDecision gate(const EvaluationResult& evaluation, const GatePolicy& policy) {
  GateDecision decision;
  decision.evaluation = evaluation;

  if (!policy.allow_hallucinations && !evaluation.hallucination_flags.empty()) {
    std::ostringstream detail;
    detail << "flagged:";
    for (const auto& id : evaluation.hallucination_flags) detail << ' ' << id;
    decision.reasons.push_back({GateRule::HallucinationFlagged, detail.str()});
  }
  if (evaluation.overall_quality < policy.min_overall_quality) {
    std::ostringstream detail;
    detail << "overall_quality " << evaluation.overall_quality << " < "
           << policy.min_overall_quality;
    decision.reasons.push_back({GateRule::BelowQualityThreshold, detail.str()});
  }
  decision.verdict = decision.reasons.empty() ? Verdict::Accept : Verdict::Reject;
  return decision;
}

EvaluationOutcome evaluate_feedback(const Assignment& assignment,
                                    const Submission& submission,
                                    const FeedbackInstance& feedback,
                                    const RubricSpec& rubric, PromptMode mode,
                                    const ModelConfig& evaluator, Gateway& gateway,
                                    const PromptTemplates& templates) {
  EvaluationOutcome outcome;
  const EvalPrompt prompt =
      build_eval_prompt(assignment, submission, feedback, rubric, mode, templates);

  std::string response;
  try {
    response = gateway.complete(prompt.text, evaluator).text;
  } catch (const Error& e) {
    outcome.error_category = e.category_name();
    outcome.error_message = e.what();
    return outcome;
  }
  outcome.raw_response = response;

  ParseReport report = parse_labels(response, rubric, evaluator.model_id, feedback.id);
  outcome.issues = report.issues;
  if (!report.ok()) {
    // One repair ask: append the parse errors and re-request the block.
    const std::string repair_prompt =
        prompt.text + "\n\nYour previous response could not be parsed: " +
        report.issue_summary() +
        "\nRe-emit the full label block in the required format.";
    outcome.repaired = true;
    try {
      response = gateway.complete(repair_prompt, evaluator).text;
    } catch (const Error& e) {
      outcome.error_category = e.category_name();
      outcome.error_message = e.what();
      return outcome;
    }
    outcome.raw_response = response;
    report = parse_labels(response, rubric, evaluator.model_id, feedback.id);
    outcome.issues = report.issues;
  }
  if (report.ok()) outcome.result = derive_evaluation(*report.record, rubric);
  return outcome;
}

GateLoopResult gate_loop(const Assignment& assignment, const Submission& submission,
                         const ModelConfig& tutor, const ModelConfig& evaluator,
                         const GatePolicy& policy, const RubricSpec& rubric,
                         PromptMode mode, Gateway& gateway,
                         const PromptTemplates& templates, int max_in_flight) {
  policy.validate();
  tutor.validate();
  evaluator.validate();

  GateLoopResult result;
  const std::string tutor_prompt = build_tutor_prompt(assignment, submission, templates);

  for (int attempt = 1; attempt <= policy.max_attempts; ++attempt) {
    // Regeneration reuses the same tutor prompt; candidate diversity comes
    // from the model, not from prompt mutation.
    const std::vector<std::string> prompts(
        static_cast<std::size_t>(policy.candidates_per_attempt), tutor_prompt);
    const auto generations = gateway.complete_batch(prompts, tutor, max_in_flight);

    struct Candidate {
      CandidateRecord record;
      std::optional<EvaluationResult> evaluation;
      FeedbackInstance feedback;
    };
    std::vector<Candidate> candidates(generations.size());

    for (std::size_t i = 0; i < generations.size(); ++i) {
      Candidate& c = candidates[i];
      c.record.attempt = attempt;
      c.record.candidate = static_cast<int>(i) + 1;
      if (!generations[i].ok()) {
        c.record.error_category = generations[i].error_category;
        c.record.error_message = generations[i].error_message;
        continue;
      }
      c.feedback.id = "gate-a" + std::to_string(attempt) + "-c" + std::to_string(i + 1);
      c.feedback.submission_id = submission.id;
      c.feedback.tutor_model = tutor.model_id;
      c.feedback.text = generations[i].outcome->text;
      c.feedback.generation_params.temperature = tutor.temperature;
      c.feedback.generation_params.reasoning_effort = tutor.reasoning_effort;
      c.record.feedback_text = c.feedback.text;

      EvaluationOutcome eval = evaluate_feedback(assignment, submission, c.feedback,
                                                 rubric, mode, evaluator, gateway,
                                                 templates);
      c.record.parse_issues = eval.issues;
      if (!eval.ok()) {
        c.record.error_category =
            eval.error_category.empty() ? "Unparseable" : eval.error_category;
        c.record.error_message = eval.error_message.empty()
                                     ? "evaluator response could not be parsed"
                                     : eval.error_message;
        continue;
      }
      c.evaluation = eval.result;
      c.record.decision = gate(*eval.result, policy);
    }

    // Select the best passing candidate: highest overall quality, earliest
    // generation order on ties.
    int best = -1;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      const auto& c = candidates[i];
      if (!c.record.decision || c.record.decision->verdict != Verdict::Accept) continue;
      if (best < 0 || c.evaluation->overall_quality >
                          candidates[static_cast<std::size_t>(best)]
                              .evaluation->overall_quality)
        best = static_cast<int>(i);
    }

    for (auto& c : candidates) result.trail.push_back(std::move(c.record));

    if (best >= 0) {
      auto& chosen = candidates[static_cast<std::size_t>(best)];
      result.accepted = std::move(chosen.feedback);
      result.accepted_decision = result.trail[result.trail.size() - candidates.size() +
                                              static_cast<std::size_t>(best)]
                                     .decision;
      result.accepted_attempt = attempt;
      return result;
    }
  }
  return result;
}

std::string trail_to_jsonl(const std::vector<CandidateRecord>& trail) {
  std::ostringstream out;
  for (const auto& r : trail) {
    nlohmann::json j;
    j["attempt"] = r.attempt;
    j["candidate"] = r.candidate;
    j["feedback_text"] = r.feedback_text;
    if (r.decision) {
      j["verdict"] = r.decision->verdict == Verdict::Accept ? "accept" : "reject";
      auto reasons = nlohmann::json::array();
      for (const auto& reason : r.decision->reasons)
        reasons.push_back({{"rule", gate_rule_name(reason.rule)}, {"detail", reason.detail}});
      j["reasons"] = reasons;
      j["overall_quality"] = r.decision->evaluation.overall_quality;
    }
    if (!r.error_category.empty()) {
      j["error_category"] = r.error_category;
      j["error_message"] = r.error_message;
    }
    if (!r.parse_issues.empty()) {
      auto issues = nlohmann::json::array();
      for (const auto& issue : r.parse_issues)
        issues.push_back({{"dimension", issue.dimension_id},
                          {"kind", parse_issue_kind_name(issue.kind)},
                          {"message", issue.message}});
      j["parse_issues"] = issues;
    }
    out << j.dump() << '\n';
  }
  return out.str();
}

}  // namespace dean
