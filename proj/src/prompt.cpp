#include "dean/prompt.hpp"

#include <sstream>

#include "dean/error.hpp"

namespace dean {

const char* prompt_mode_name(PromptMode m) {
  return m == PromptMode::ZeroShot ? "zero_shot" : "few_shot";
}

PromptMode prompt_mode_from_string(const std::string& s) {
  if (s == "zero_shot" || s == "zero-shot") return PromptMode::ZeroShot;
  if (s == "few_shot" || s == "few-shot") return PromptMode::FewShot;
  throw Error(Errc::MalformedConfig, "unknown prompt mode '" + s + "'");
}

namespace {

constexpr const char* kDefaultEvalTemplate =
    "Assignment Description:\n{assignment}\n\n"
    "Student Submission:\n{submission}\n\n"
    "Feedback to Evaluate:\n{feedback}\n\n"
    "Labelling Rubric:\n{rubric}\n\n"
    "{output_format}";

constexpr const char* kDefaultTutorTemplate =
    "You are a tutor. Give formative feedback on the student's assignment "
    "submission below, judged against the assignment description.\n\n"
    "Assignment Description:\n{assignment}\n\n"
    "Student Submission:\n{submission}\n\n"
    "Write the feedback now. Comment on strengths and weaknesses of specific "
    "aspects of the submission, refer to the assignment goals, and suggest "
    "concrete next steps.";

std::string replace_all(std::string text, const std::string& from, const std::string& to) {
  std::size_t pos = 0;
  while ((pos = text.find(from, pos)) != std::string::npos) {
    text.replace(pos, from.size(), to);
    pos += to.size();
  }
  return text;
}

void require_placeholder_order(const std::string& tmpl,
                               const std::vector<std::string>& names) {
  std::size_t last = 0;
  for (const auto& name : names) {
    std::size_t pos = tmpl.find("{" + name + "}");
    if (pos == std::string::npos)
      throw Error(Errc::TemplateViolation, "template missing placeholder {" + name + "}");
    if (pos < last)
      throw Error(Errc::TemplateViolation,
                  "template places {" + name + "} out of order; required order is "
                  "assignment, submission, rubric, output_format");
    last = pos;
  }
}

// Each line of the exemplar feedback is quoted on its own line; one
// exemplar can span several comments.
void append_exemplar(std::ostringstream& out, const Exemplar& ex) {
  out << "Example Feedback: \n";
  std::istringstream lines(ex.feedback);
  std::string line;
  while (std::getline(lines, line)) out << '"' << line << '"' << '\n';
  out << '(' << ex.rationale << ')' << '\n';
}

}  // namespace

std::string render_rubric_dimension(const DimensionSpec& dim, int index, PromptMode mode) {
  if (mode == PromptMode::FewShot && dim.exemplars.empty())
    throw Error(Errc::MissingExemplars,
                "dimension '" + dim.id + "' has no exemplars for few-shot rendering");

  std::ostringstream out;
  out << index << ". " << dim.name << ": " << dim.description << '\n';
  for (int score : valid_scores(dim.scale)) {
    out << "   Score " << score << ": " << dim.score_descriptors.at(score) << '\n';
    if (mode == PromptMode::FewShot)
      for (const auto& ex : dim.exemplars)
        if (ex.score == score) append_exemplar(out, ex);
  }
  std::string block = out.str();
  block.pop_back();  // no trailing newline; the caller joins blocks
  return block;
}

std::string render_rubric_section(const RubricSpec& rubric, PromptMode mode) {
  std::ostringstream out;
  int index = 1;
  for (const auto& dim : rubric.dimensions()) {
    if (index > 1) out << "\n\n";
    out << render_rubric_dimension(dim, index, mode);
    ++index;
  }
  return out.str();
}

std::string render_output_format_section(const RubricSpec& rubric) {
  std::ostringstream out;
  out << "Output Format:\n"
         "Label every rubric dimension above. Output one line per dimension, "
         "in the order listed, formatted exactly as:\n"
         "<dimension_id>: <integer score>\n"
         "The dimension ids, in order, are: ";
  const auto ids = rubric.ids();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out << ", ";
    out << ids[i];
  }
  out << ".\n"
         "Scores must be integers valid for each dimension's scale. Do not "
         "output anything else. You may optionally end with a single block "
         "starting with \"explanation:\" followed by brief notes on "
         "difficult labels.";
  return out.str();
}

EvalPrompt build_eval_prompt(const Assignment& assignment, const Submission& submission,
                             const FeedbackInstance& feedback, const RubricSpec& rubric,
                             PromptMode mode, const PromptTemplates& templates) {
  if (assignment.description.empty() || submission.body.empty() || feedback.text.empty())
    throw Error(Errc::EmptyInput, "eval prompt requires non-empty assignment, "
                                  "submission, and feedback texts");

  const std::string tmpl = templates.eval_template.value_or(kDefaultEvalTemplate);
  require_placeholder_order(tmpl, {"assignment", "submission", "rubric", "output_format"});
  if (tmpl.find("{feedback}") == std::string::npos)
    throw Error(Errc::TemplateViolation, "template missing placeholder {feedback}");

  std::string text = tmpl;
  text = replace_all(text, "{assignment}", assignment.description);
  text = replace_all(text, "{submission}", submission.body);
  text = replace_all(text, "{feedback}", feedback.text);
  text = replace_all(text, "{rubric}", render_rubric_section(rubric, mode));
  text = replace_all(text, "{output_format}", render_output_format_section(rubric));

  EvalPrompt prompt;
  prompt.text = std::move(text);
  prompt.mode = mode;
  prompt.rubric_version = rubric.version();
  return prompt;
}

std::string build_tutor_prompt(const Assignment& assignment, const Submission& submission,
                               const PromptTemplates& templates) {
  if (assignment.description.empty() || submission.body.empty())
    throw Error(Errc::EmptyInput,
                "tutor prompt requires non-empty assignment and submission texts");
  const std::string tmpl = templates.tutor_template.value_or(kDefaultTutorTemplate);
  require_placeholder_order(tmpl, {"assignment", "submission"});
  std::string text = tmpl;
  text = replace_all(text, "{assignment}", assignment.description);
  text = replace_all(text, "{submission}", submission.body);
  return text;
}

std::string explanatory_suffix() {
  return "Here you are free to briefly explain some labelling results that "
         "you think might be not straight-forward to others. Specially, I "
         "suggest that you explain your label of hallucinations here if and "
         "only if you labelled some hallucinations above.";
}

}  // namespace dean
