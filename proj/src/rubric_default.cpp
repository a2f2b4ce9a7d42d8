#include "dean/rubric.hpp"

namespace dean {

namespace {

DimensionSpec dim(std::string id, std::string name, Aspect aspect,
                  std::string description,
                  std::map<int, std::string> descriptors,
                  std::vector<Exemplar> exemplars) {
  DimensionSpec d;
  d.id = std::move(id);
  d.name = std::move(name);
  d.aspect = aspect;
  d.scale = aspect == Aspect::Content ? Scale::Likert3 : Scale::Binary;
  d.description = std::move(description);
  d.score_descriptors = std::move(descriptors);
  d.exemplars = std::move(exemplars);
  return d;
}

RubricSpec make_default() {
  std::vector<DimensionSpec> dims;

  // Content dimensions (3-point Likert).
  dims.push_back(dim(
      "alignment_with_goals", "Alignment with goals", Aspect::Content,
      "Alignment with goals evaluates to what extent most comments are "
      "aligned to specific learning goals.",
      {{0, "No reference to assignment goals in specific comments."},
       {1, "References goals partly and vaguely."},
       {2, "References goals clearly in most comments."}},
      {{0, "Nice work—keep going!",
        "No reference to any assignment goals or criteria."},
       {1, "Your introduction is okay, but make it stronger to add depth.",
        "Mentions a goal vaguely but does not tie it to a specific learning "
        "outcome or stated goal."},
       {2,
        "Excellent work linking your data analysis to the learning outcome "
        "of critically evaluating statistical models; each example "
        "demonstrates how you tested and interpreted the hypothesis.\n"
        "Please also review the FIT citation style as in-text citation is "
        "missing in your report.",
        "Most comments are explicitly framed in objective-language and "
        "aligned to the rubric or task requirements or other goals for "
        "improvement."}}));

  dims.push_back(dim(
      "specificity", "Specificity", Aspect::Content,
      "Specificity evaluates to what extent all comments offer detailed, "
      "actionable guidance, and if the feedback includes any concrete "
      "example(s) of how to improve.",
      {{0, "Comments are generic with no actionable guidance or examples."},
       {1, "Some comments offer actionable guidance but detail or concrete "
           "examples are sparse."},
       {2, "Comments consistently offer detailed, actionable guidance with "
           "concrete example(s) of how to improve."}},
      {{0, "Good job overall, but this needs work.",
        "Offers no detail, actionable guidance, or examples."},
       {1, "Consider improving your error handling; some functions ignore "
           "failure cases.",
        "Actionable but gives no concrete example of how to improve."},
       {2, "Your loop recomputes the list length on every pass; hoist it "
           "into a variable before the loop, for example n = len(items), to "
           "avoid the quadratic cost.",
        "Detailed, actionable guidance including a concrete example."}}));

  dims.push_back(dim(
      "motivational_tone", "Motivational Tone", Aspect::Content,
      "Motivational Tone evaluates to what extent the tone of feedback is "
      "consistently positive, encouraging, and respectful.",
      {{0, "Tone is negative, discouraging, or disrespectful."},
       {1, "Tone is neutral or only inconsistently encouraging."},
       {2, "Tone is consistently positive, encouraging, and respectful."}},
      {{0, "This is sloppy work and it reads like you did not even try.",
        "Negative and disrespectful tone."},
       {1, "The report is acceptable. Fix the second section.",
        "Neutral tone, neither encouraging nor discouraging."},
       {2, "You have made real progress here! Keep refining the second "
           "section and this will be a strong report.",
        "Consistently positive, encouraging, and respectful."}}));

  dims.push_back(dim(
      "strength", "Strength", Aspect::Content,
      "Strength evaluates to what extent the feedback mentions strength of "
      "specific aspect(s) of the student submission.",
      {{0, "No strengths of the submission are mentioned."},
       {1, "Strengths are mentioned only in general terms."},
       {2, "Strengths of specific aspect(s) of the submission are clearly "
           "identified."}},
      {{0, "Fix the citation format and expand the conclusion.",
        "Mentions no strengths of the submission."},
       {1, "Nice work, the report is generally solid.",
        "Praises the submission only in general terms."},
       {2, "Your benchmark methodology is a clear strength: the warm-up "
           "runs and repeated trials make the timing results trustworthy.",
        "Identifies the strength of a specific aspect of the submission."}}));

  dims.push_back(dim(
      "weakness", "Weakness", Aspect::Content,
      "Weakness evaluates to what extent the feedback mentions weakness of "
      "specific aspect(s) of the student submission.",
      {{0, "No weaknesses of the submission are mentioned."},
       {1, "Weaknesses are mentioned only in general terms."},
       {2, "Weaknesses of specific aspect(s) of the submission are clearly "
           "identified."}},
      {{0, "Great submission, everything is in order.",
        "Mentions no weaknesses of the submission."},
       {1, "Some parts of the analysis feel underdeveloped.",
        "Notes a weakness only in general terms."},
       {2, "The complexity analysis in section 3 is incorrect: the nested "
           "loop over edges makes the algorithm O(V*E), not O(E) as claimed.",
        "Identifies the weakness of a specific aspect of the submission."}}));

  // Effectiveness dimensions (binary presence markers).
  dims.push_back(dim(
      "feed_forward", "Feed forward", Aspect::Effectiveness,
      "Feed forward is about the next steps in learning and the next tasks "
      "and activities.",
      {{0, "No guidance on next steps in learning or upcoming tasks."},
       {1, "Includes guidance on next steps in learning and the next tasks "
           "and activities."}},
      {{0, "The sorting section is correct and clearly written.",
        "No guidance about next steps or upcoming tasks."},
       {1, "For the next assignment, try profiling your code before "
           "optimising and start from the provided test harness.",
        "Points to next steps in learning and the next tasks."}}));

  dims.push_back(dim(
      "feed_up", "Feed up", Aspect::Effectiveness,
      "Feed up refers to reminders about the goals and judgements about the "
      "success in goal attainment.",
      {{0, "No reminders about the goals or judgements about success in "
           "goal attainment."},
       {1, "Includes reminders about the goals and judgements about the "
           "success in goal attainment."}},
      {{0, "Tidy up the variable names in the parser module.",
        "No reminder of the goals or judgement of goal attainment."},
       {1, "Remember the goal of this assignment is to practise recursion; "
           "your traversal solution meets that goal.",
        "Reminds the student of the goal and judges success in attaining "
        "it."}}));

  dims.push_back(dim(
      "feed_back", "Feed back", Aspect::Effectiveness,
      "Feed back is about the student's progress towards achieving the "
      "learning goal, and responding to student work.",
      {{0, "No comment on the student's progress towards achieving the "
           "learning goal."},
       {1, "Comments on the student's progress towards achieving the "
           "learning goal."}},
      {{0, "Next time, add unit tests for the edge cases.",
        "Does not respond to the student's progress so far."},
       {1, "Compared to your first draft, the argument structure has "
           "improved noticeably; your progress towards the learning goal is "
           "visible.",
        "Comments on progress towards achieving the learning goal."}}));

  dims.push_back(dim(
      "on_task", "Feedback on task", Aspect::Effectiveness,
      "Feedback on task includes comments about how well a task is being "
      "accomplished or performed, such as distinguishing correct from "
      "incorrect answers.",
      {{0, "No comment on how well the task is being accomplished or "
           "performed."},
       {1, "Comments on how well the task is being accomplished, such as "
           "distinguishing correct from incorrect answers."}},
      {{0, "Keep believing in yourself, you are a capable student.",
        "No comment on how well the task itself is accomplished."},
       {1, "Your answer to question 2 is correct, but question 3 misses the "
           "boundary case where the list is empty.",
        "Distinguishes correct from incorrect parts of the task."}}));

  dims.push_back(dim(
      "on_process", "Feedback on process", Aspect::Effectiveness,
      "Feedback on process refers to directive developmental guidance in "
      "relation to future work, directed to the process used to create a "
      "product or complete a task.",
      {{0, "No directive guidance on the process used to complete the "
           "task."},
       {1, "Includes directive developmental guidance on the process used "
           "to complete the task."}},
      {{0, "The final answer is correct.",
        "No guidance on the process used to complete the task."},
       {1, "Before writing code, sketch the data flow first; deriving the "
           "invariants up front would have caught the off-by-one error.",
        "Directs the student to the process used to complete the task."}}));

  dims.push_back(dim(
      "on_self_regulation", "Feedback on self-regulation",
      Aspect::Effectiveness,
      "Feedback on self-regulation refers to the informative developmental "
      "guidance component in the feedback, such as fostering greater "
      "self-assessment or confidence skills.",
      {{0, "No component fostering self-assessment or self-regulation."},
       {1, "Includes a component fostering self-assessment, confidence, or "
           "self-regulation."}},
      {{0, "Section 2 contains two calculation errors.",
        "No component fostering self-assessment or self-regulation."},
       {1, "Try checking your own output against the sample cases before "
           "submitting; building that habit will let you catch most of "
           "these issues yourself.",
        "Fosters self-assessment and self-regulatory skills."}}));

  dims.push_back(dim(
      "on_self", "Feedback on self", Aspect::Effectiveness,
      "Feedback on self is personal in the sense that it is directed to the "
      "self, and is often unrelated to task performance.",
      {{0, "No personal feedback directed to the self."},
       {1, "Includes personal feedback directed to the self, often "
           "unrelated to task performance."}},
      {{0, "The proof in part B skips the induction step.",
        "No feedback directed to the student as a person."},
       {1, "You are clearly a dedicated student.",
        "Personal feedback directed to the self, unrelated to task "
        "performance."}}));

  // Hallucination dimensions (binary detections).
  dims.push_back(dim(
      "input_conflicting", "Input-conflicting Hallucinations",
      Aspect::Hallucination,
      "Input-conflicting hallucinations replace correct input information "
      "with errors, such as swapping a person's name in a summary.",
      {{0, "No conflict with the provided assignment or submission "
           "content."},
       {1, "Replaces or contradicts correct input information from the "
           "assignment or submission."}},
      {{0, "Your report compares quicksort and mergesort as required and "
           "the benchmark numbers match your tables.",
        "Feedback is consistent with the submitted content."},
       {1, "Your essay on graph colouring is well structured and covers "
           "all required heuristics.",
        "Describes content absent from the submission, replacing correct "
        "input information with errors."}}));

  dims.push_back(dim(
      "context_conflicting", "Context-conflicting Hallucinations",
      Aspect::Hallucination,
      "Context-conflicting hallucinations provide contradictory information "
      "within the same context, leading to confusion and misinformation.",
      {{0, "No contradictory statements within the feedback."},
       {1, "Provides contradictory information within the same feedback."}},
      {{0, "The feedback consistently praises the clarity of section 1 and "
           "asks for more depth in section 2.",
        "No contradictory statements within the feedback."},
       {1, "Your code handles all edge cases correctly. The empty-input "
           "case your code fails on should be fixed.",
        "Contradicts itself within the same feedback about edge-case "
        "handling."}}));

  dims.push_back(dim(
      "fact_conflicting", "Fact-conflicting Hallucinations",
      Aspect::Hallucination,
      "Fact-conflicting hallucinations produce text that contradicts known "
      "facts.",
      {{0, "No contradiction of known facts."},
       {1, "Produces text that contradicts known facts."}},
      {{0, "Binary search indeed requires a sorted array, as your write-up "
           "states.",
        "Consistent with known facts."},
       {1, "Remember that binary search runs in O(n) time, so your O(log n) "
           "claim is wrong.",
        "Contradicts the known fact that binary search runs in logarithmic "
        "time."}}));

  return RubricSpec("1.0", std::move(dims));
}

}  // namespace

RubricSpec default_rubric() {
  static const RubricSpec rubric = make_default();
  return rubric;
}

const std::string& default_rubric_config() {
  static const std::string config = serialize_rubric(default_rubric());
  return config;
}

}  // namespace dean
