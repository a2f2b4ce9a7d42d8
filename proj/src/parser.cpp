#include "dean/parser.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <map>
#include <sstream>

#include "dean/error.hpp"

namespace dean {

const char* parse_issue_kind_name(ParseIssueKind k) {
  switch (k) {
    case ParseIssueKind::MissingDimension: return "MissingDimension";
    case ParseIssueKind::OutOfRange: return "OutOfRange";
    case ParseIssueKind::DuplicateConflict: return "DuplicateConflict";
    case ParseIssueKind::Unparseable: return "Unparseable";
    case ParseIssueKind::DuplicateRepeated: return "DuplicateRepeated";
    case ParseIssueKind::UnrecognizedLine: return "UnrecognizedLine";
  }
  return "Unparseable";
}

bool parse_issue_fatal(ParseIssueKind k) {
  switch (k) {
    case ParseIssueKind::MissingDimension:
    case ParseIssueKind::OutOfRange:
    case ParseIssueKind::DuplicateConflict:
    case ParseIssueKind::Unparseable:
      return true;
    case ParseIssueKind::DuplicateRepeated:
    case ParseIssueKind::UnrecognizedLine:
      return false;
  }
  return true;
}

std::vector<ParseIssue> ParseReport::fatal_issues() const {
  std::vector<ParseIssue> out;
  for (const auto& i : issues)
    if (parse_issue_fatal(i.kind)) out.push_back(i);
  return out;
}

std::string ParseReport::issue_summary() const {
  std::ostringstream out;
  bool first = true;
  for (const auto& i : issues) {
    if (!parse_issue_fatal(i.kind)) continue;
    if (!first) out << "; ";
    first = false;
    out << parse_issue_kind_name(i.kind) << "(" << i.dimension_id << "): " << i.message;
  }
  return out.str();
}

namespace {

// Case-insensitive match on id with punctuation stripped, so
// "Alignment with goals", "alignment_with_goals", and "**Feed back**"
// all land on the same key.
std::string normalize_key(const std::string& s) {
  std::string out;
  for (unsigned char c : s)
    if (std::isalnum(c)) out.push_back(static_cast<char>(std::tolower(c)));
  return out;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool is_fence_line(const std::string& line) {
  std::string t = trim(line);
  return t.rfind("```", 0) == 0;
}

// Strips leading list markers like "3.", "-", "*", "3)". Digits followed by
// ':' are kept; those are score values on malformed lines, not markers.
std::string strip_list_marker(const std::string& line) {
  std::size_t i = 0;
  while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
  std::size_t start = i;
  if (i < line.size() && (line[i] == '-' || line[i] == '*')) {
    ++i;
    if (i < line.size() && line[i] == ' ') return line.substr(i + 1);
    return line.substr(start);
  }
  std::size_t d = i;
  while (d < line.size() && std::isdigit(static_cast<unsigned char>(line[d]))) ++d;
  if (d > i && d < line.size() && (line[d] == '.' || line[d] == ')')) {
    std::size_t after = d + 1;
    while (after < line.size() && line[after] == ' ') ++after;
    return line.substr(after);
  }
  return line.substr(start);
}

bool parse_int_strict(const std::string& s, long& out) {
  std::string t = trim(s);
  if (t.empty()) return false;
  std::size_t i = t[0] == '-' || t[0] == '+' ? 1 : 0;
  if (i == t.size()) return false;
  for (std::size_t j = i; j < t.size(); ++j)
    if (!std::isdigit(static_cast<unsigned char>(t[j]))) return false;
  try {
    out = std::stol(t);
  } catch (const std::exception&) {
    return false;
  }
  return true;
}

}  // namespace

ParseReport parse_labels(const std::string& text, const RubricSpec& rubric,
                         const std::string& rater_id, const std::string& feedback_id) {
  ParseReport report;

  std::map<std::string, std::string> key_to_id;
  for (const auto& dim : rubric.dimensions()) {
    key_to_id[normalize_key(dim.id)] = dim.id;
    key_to_id[normalize_key(dim.name)] = dim.id;
  }

  std::map<std::string, int> scores;
  std::optional<std::string> explanation;
  bool in_explanation = false;
  std::string explanation_text;

  std::istringstream lines(text);
  std::string raw_line;
  while (std::getline(lines, raw_line)) {
    if (!raw_line.empty() && raw_line.back() == '\r') raw_line.pop_back();

    if (in_explanation) {
      explanation_text += '\n';
      explanation_text += raw_line;
      continue;
    }
    if (is_fence_line(raw_line)) continue;
    std::string line = strip_list_marker(raw_line);
    if (trim(line).empty()) continue;

    std::size_t colon = line.find(':');
    if (colon == std::string::npos) {
      report.issues.push_back({"global", ParseIssueKind::UnrecognizedLine, trim(line)});
      continue;
    }
    std::string key = normalize_key(line.substr(0, colon));
    std::string rest = line.substr(colon + 1);

    if (key == "explanation") {
      in_explanation = true;
      explanation_text = trim(rest);
      continue;
    }

    auto it = key_to_id.find(key);
    if (it == key_to_id.end()) {
      report.issues.push_back({"global", ParseIssueKind::UnrecognizedLine, trim(line)});
      continue;
    }
    const std::string& id = it->second;
    const DimensionSpec* dim = rubric.find(id);

    long value = 0;
    if (!parse_int_strict(rest, value)) {
      report.issues.push_back(
          {id, ParseIssueKind::Unparseable, "score '" + trim(rest) + "' is not an integer"});
      continue;
    }
    if (value < INT32_MIN || value > INT32_MAX ||
        !score_valid(dim->scale, static_cast<int>(value))) {
      report.issues.push_back({id, ParseIssueKind::OutOfRange,
                               "score " + std::to_string(value) + " invalid for " +
                                   scale_name(dim->scale)});
      continue;
    }
    auto found = scores.find(id);
    if (found != scores.end()) {
      if (found->second != static_cast<int>(value)) {
        report.issues.push_back({id, ParseIssueKind::DuplicateConflict,
                                 "conflicting scores " + std::to_string(found->second) +
                                     " and " + std::to_string(value)});
      } else {
        report.issues.push_back(
            {id, ParseIssueKind::DuplicateRepeated, "dimension repeated with same value"});
      }
      continue;
    }
    scores[id] = static_cast<int>(value);
  }

  if (scores.empty()) {
    report.issues.push_back({"global", ParseIssueKind::Unparseable, "no score lines found"});
    return report;
  }

  for (const auto& dim : rubric.dimensions())
    if (!scores.count(dim.id))
      report.issues.push_back(
          {dim.id, ParseIssueKind::MissingDimension, "dimension not present in response"});

  if (in_explanation) {
    std::string t = trim(explanation_text);
    // Drop a trailing line that is just a closing markdown fence.
    std::size_t cut = t.find_last_of('\n');
    std::string last = cut == std::string::npos ? t : t.substr(cut + 1);
    if (is_fence_line(last)) t = trim(cut == std::string::npos ? "" : t.substr(0, cut));
    if (!t.empty()) explanation = t;
  }

  if (report.fatal_issues().empty()) {
    LabelRecord record;
    record.feedback_id = feedback_id;
    record.rater = rater_id;
    record.scores = std::move(scores);
    record.explanation = std::move(explanation);
    report.record = std::move(record);
  }
  return report;
}

std::string serialize_labels(const LabelRecord& record, const RubricSpec& rubric) {
  validate_label(record, rubric);
  std::ostringstream out;
  bool first = true;
  for (const auto& dim : rubric.dimensions()) {
    if (!first) out << '\n';
    first = false;
    out << dim.id << ": " << record.scores.at(dim.id);
  }
  if (record.explanation && !record.explanation->empty())
    out << "\nexplanation: " << *record.explanation;
  return out.str();
}

}  // namespace dean
