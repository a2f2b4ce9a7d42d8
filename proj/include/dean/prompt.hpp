#pragma once

#include <optional>
#include <string>

#include "dean/corpus.hpp"
#include "dean/rubric.hpp"

namespace dean {

enum class PromptMode { ZeroShot, FewShot };

const char* prompt_mode_name(PromptMode m);
PromptMode prompt_mode_from_string(const std::string& s);

struct EvalPrompt {
  std::string text;
  PromptMode mode = PromptMode::ZeroShot;
  std::string rubric_version;
};

/// Optional template overrides. Placeholders: {assignment}, {submission},
/// {feedback}, {rubric}, {output_format} for the evaluator template;
/// {assignment}, {submission} for the tutor template. Section order in the
/// evaluator template must keep assignment before submission before rubric
/// before output format.
struct PromptTemplates {
  std::optional<std::string> eval_template;
  std::optional<std::string> tutor_template;
};

/// Renders the numbered rubric block for one dimension. FewShot interleaves
/// each score descriptor with that score's exemplars and parenthetical
/// rationales.
std::string render_rubric_dimension(const DimensionSpec& dim, int index, PromptMode mode);

/// All dimension blocks in rubric order, separated by blank lines.
std::string render_rubric_section(const RubricSpec& rubric, PromptMode mode);

/// The output-format restriction the evaluator must follow; parse_labels
/// accepts exactly this shape.
std::string render_output_format_section(const RubricSpec& rubric);

EvalPrompt build_eval_prompt(const Assignment& assignment, const Submission& submission,
                             const FeedbackInstance& feedback, const RubricSpec& rubric,
                             PromptMode mode, const PromptTemplates& templates = {});

std::string build_tutor_prompt(const Assignment& assignment, const Submission& submission,
                               const PromptTemplates& templates = {});

/// The instruction sentence appended after the few-shot prompt in the
/// explanatory fine-tuning regime. Never part of build_eval_prompt output.
std::string explanatory_suffix();

}  // namespace dean
