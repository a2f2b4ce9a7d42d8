#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dean/corpus.hpp"
#include "dean/rubric.hpp"

namespace dean {

enum class ParseIssueKind {
  MissingDimension,
  OutOfRange,
  DuplicateConflict,
  Unparseable,
  DuplicateRepeated,   // same dimension twice, same value; non-fatal
  UnrecognizedLine,    // noise tolerated; non-fatal
};

const char* parse_issue_kind_name(ParseIssueKind k);
bool parse_issue_fatal(ParseIssueKind k);

struct ParseIssue {
  std::string dimension_id;  // "global" when not tied to a dimension
  ParseIssueKind kind = ParseIssueKind::Unparseable;
  std::string message;
};

struct ParseReport {
  std::optional<LabelRecord> record;  // present iff no fatal issue
  std::vector<ParseIssue> issues;

  bool ok() const { return record.has_value(); }
  std::vector<ParseIssue> fatal_issues() const;
  std::string issue_summary() const;
};

/// Parses an evaluator response into a LabelRecord. Tolerates surrounding
/// whitespace, markdown fences, list markers, reordered lines, and
/// case/punctuation drift in dimension names. Missing dimensions,
/// conflicting duplicates, and out-of-range scores are fatal; scores are
/// never coerced. A trailing `explanation:` block is captured verbatim.
ParseReport parse_labels(const std::string& text, const RubricSpec& rubric,
                         const std::string& rater_id, const std::string& feedback_id);

/// Canonical label block: one `<dimension_id>: <score>` line per dimension
/// in rubric order, then an optional `explanation:` block.
/// parse_labels(serialize_labels(r)) reproduces r.
std::string serialize_labels(const LabelRecord& record, const RubricSpec& rubric);

}  // namespace dean
