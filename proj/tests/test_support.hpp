#pragma once

// Shared helpers for the test suites.

#include <unistd.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "dean/corpus.hpp"
#include "dean/rubric.hpp"

namespace dean::test {

inline std::filesystem::path source_dir() { return DEAN_SOURCE_DIR; }

inline std::filesystem::path golden_path(const std::string& name) {
  return source_dir() / "tests" / "golden" / name;
}

inline std::filesystem::path fixture_path(const std::string& name) {
  return source_dir() / "tests" / "fixtures" / name;
}

/// Fresh scratch directory, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("dean_test_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << content;
}

/// Label with fixed scores per aspect over the given rubric.
inline LabelRecord make_label(const RubricSpec& rubric, const std::string& feedback_id,
                              int content_score, int effectiveness_score,
                              int hallucination_score,
                              const std::string& rater = "tester") {
  LabelRecord label;
  label.feedback_id = feedback_id;
  label.rater = rater;
  for (const auto& dim : rubric.dimensions()) {
    switch (dim.aspect) {
      case Aspect::Content: label.scores[dim.id] = content_score; break;
      case Aspect::Effectiveness: label.scores[dim.id] = effectiveness_score; break;
      case Aspect::Hallucination: label.scores[dim.id] = hallucination_score; break;
    }
  }
  return label;
}

/// Tiny in-memory corpus: one assignment, one submission, one feedback.
inline Corpus tiny_corpus() {
  Corpus c;
  c.add_assignment({"a1", "c1",
                    "Implement a sorting algorithm and analyse its complexity. "
                    "Goals: correctness, complexity analysis, clear write-up."});
  c.add_submission({"s1", "a1",
                    "I implemented quicksort with a median-of-three pivot. The "
                    "average complexity is O(n log n).",
                    ""});
  FeedbackInstance f;
  f.id = "f1";
  f.submission_id = "s1";
  f.tutor_model = "tutor-x";
  f.text = "Good pivot choice. Consider adding a worst-case analysis and unit "
           "tests for duplicate keys.";
  c.add_feedback(f);
  c.validate();
  return c;
}

}  // namespace dean::test
