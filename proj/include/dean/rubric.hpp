#pragma once

#include <map>
#include <string>
#include <vector>

namespace dean {

enum class Aspect { Content, Effectiveness, Hallucination };
enum class Scale { Likert3, Binary };

const char* aspect_name(Aspect a);
const char* scale_name(Scale s);
Aspect aspect_from_string(const std::string& s);
Scale scale_from_string(const std::string& s);

/// Valid scores for a scale: {0,1,2} for Likert3, {0,1} for Binary.
std::vector<int> valid_scores(Scale s);
bool score_valid(Scale s, int score);

/// One worked example used in few-shot rubric rendering. `feedback` may
/// contain newlines; each line is rendered as its own quoted line.
struct Exemplar {
  int score = 0;
  std::string feedback;
  std::string rationale;

  bool operator==(const Exemplar&) const = default;
};

struct DimensionSpec {
  std::string id;    // stable snake_case key used in all serialized records
  std::string name;  // display name
  Aspect aspect = Aspect::Content;
  Scale scale = Scale::Likert3;
  std::string description;
  std::map<int, std::string> score_descriptors;
  std::vector<Exemplar> exemplars;

  bool operator==(const DimensionSpec&) const = default;
};

/// The evaluation framework as data. Immutable after load; dimension order
/// is stable and defines prompt rendering order and label block order.
class RubricSpec {
 public:
  RubricSpec() = default;
  RubricSpec(std::string version, std::vector<DimensionSpec> dimensions);

  const std::string& version() const { return version_; }
  const std::vector<DimensionSpec>& dimensions() const { return dimensions_; }
  std::size_t size() const { return dimensions_.size(); }

  const DimensionSpec* find(const std::string& id) const;
  std::vector<std::string> ids() const;
  std::vector<const DimensionSpec*> by_aspect(Aspect a) const;

  bool operator==(const RubricSpec&) const = default;

 private:
  std::string version_;
  std::vector<DimensionSpec> dimensions_;
};

/// Parses and validates a rubric config (JSON text). Throws Error with the
/// offending dimension id and reason on malformed input, duplicate ids,
/// missing descriptors, or exemplar scores outside the dimension's scale.
RubricSpec load_rubric(const std::string& config_text);

/// Canonical JSON form; load_rubric(serialize_rubric(r)) == r.
std::string serialize_rubric(const RubricSpec& rubric);

/// The built-in 15-dimension rubric (5 content, 7 effectiveness,
/// 3 hallucination).
RubricSpec default_rubric();

/// The canonical config text default_rubric() is loaded from; shipped as
/// rubric/default.json.
const std::string& default_rubric_config();

}  // namespace dean
