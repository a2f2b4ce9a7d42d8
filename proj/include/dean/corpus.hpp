#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dean/rubric.hpp"

namespace dean {

struct Assignment {
  std::string id;
  std::string course_id;
  std::string description;  // includes rubric and assignment materials

  bool operator==(const Assignment&) const = default;
};

struct Submission {
  std::string id;
  std::string assignment_id;
  std::string body;
  std::string origin;  // corpus origin tag, e.g. "synthetic" or "real"; optional

  bool operator==(const Submission&) const = default;
};

struct GenerationParams {
  double temperature = 0.0;
  std::optional<std::string> reasoning_effort;
  std::string timestamp;  // ISO-8601; empty for offline (deterministic) runs

  bool operator==(const GenerationParams&) const = default;
};

struct FeedbackInstance {
  std::string id;
  std::string submission_id;
  std::string tutor_model;
  std::string text;
  GenerationParams generation_params;

  bool operator==(const FeedbackInstance&) const = default;
};

struct LabelRecord {
  std::string feedback_id;
  std::string rater;  // human coder id or evaluator-model id
  std::map<std::string, int> scores;
  std::optional<std::string> explanation;

  bool operator==(const LabelRecord&) const = default;
};

/// Validates a label's score set against the rubric: key set must equal the
/// rubric's dimension ids and each score must fit its dimension's scale.
/// Throws Error(InvalidScore / DanglingReference) on violation.
void validate_label(const LabelRecord& label, const RubricSpec& rubric);

enum class SplitSide { Train, Test };

struct SplitAssignment {
  std::map<std::string, SplitSide> side;  // feedback_id -> side

  std::size_t train_count() const;
  std::size_t test_count() const;
  bool operator==(const SplitAssignment&) const = default;
};

/// In-memory corpus with referential-integrity guarantees. Read-only after
/// load; safe to share across threads.
class Corpus {
 public:
  Corpus() = default;

  const std::vector<Assignment>& assignments() const { return assignments_; }
  const std::vector<Submission>& submissions() const { return submissions_; }
  const std::vector<FeedbackInstance>& feedback() const { return feedback_; }
  const std::vector<LabelRecord>& labels() const { return labels_; }

  const Assignment* find_assignment(const std::string& id) const;
  const Submission* find_submission(const std::string& id) const;
  const FeedbackInstance* find_feedback(const std::string& id) const;

  /// Assignment for a submission id (resolves the chain); null if dangling.
  const Assignment* assignment_of_submission(const std::string& submission_id) const;

  void add_assignment(Assignment a);
  void add_submission(Submission s);
  void add_feedback(FeedbackInstance f);
  void add_label(LabelRecord l);

  /// Checks referential integrity and, when a rubric is given, label score
  /// validity. Throws Error(DanglingReference / InvalidScore).
  void validate(const RubricSpec* rubric = nullptr) const;

  bool operator==(const Corpus&) const = default;

 private:
  std::vector<Assignment> assignments_;
  std::vector<Submission> submissions_;
  std::vector<FeedbackInstance> feedback_;
  std::vector<LabelRecord> labels_;
  std::map<std::string, std::size_t> assignment_index_;
  std::map<std::string, std::size_t> submission_index_;
  std::map<std::string, std::size_t> feedback_index_;
};

/// Loads assignments.jsonl / submissions.jsonl / feedback.jsonl /
/// labels.jsonl from a directory. feedback and labels files are optional.
/// Referential integrity is verified; labels are scale-checked when a
/// rubric is supplied.
Corpus load_corpus(const std::filesystem::path& dir, const RubricSpec* rubric = nullptr);

/// Writes the corpus back as JSONL files; save then load round-trips exactly.
void save_corpus(const Corpus& corpus, const std::filesystem::path& dir);

std::vector<LabelRecord> load_labels(const std::filesystem::path& file);
void save_labels(const std::vector<LabelRecord>& labels, const std::filesystem::path& file);

std::vector<FeedbackInstance> load_feedback_file(const std::filesystem::path& file);
void save_feedback_file(const std::vector<FeedbackInstance>& feedback,
                        const std::filesystem::path& file);

SplitAssignment load_split(const std::filesystem::path& file);
void save_split(const SplitAssignment& split, const std::filesystem::path& file);

/// Splits labelled feedback into train/test, stratified by tutor model.
/// Within each stratum the train count is floor or ceil of the exact
/// proportion (largest-remainder apportionment against the global target
/// round(train_fraction * total)), so per-stratum deviation is < 1.
/// Deterministic given the seed.
SplitAssignment stratified_split(const std::vector<LabelRecord>& labels,
                                 const Corpus& corpus, double train_fraction,
                                 std::uint64_t seed);

}  // namespace dean
