#include "dean/rubric.hpp"

#include <algorithm>
#include <set>

#include "json.hpp"

#include "dean/error.hpp"

namespace dean {

const char* aspect_name(Aspect a) {
  switch (a) {
    case Aspect::Content: return "content";
    case Aspect::Effectiveness: return "effectiveness";
    case Aspect::Hallucination: return "hallucination";
  }
  return "content";
}

const char* scale_name(Scale s) {
  return s == Scale::Likert3 ? "likert3" : "binary";
}

Aspect aspect_from_string(const std::string& s) {
  if (s == "content") return Aspect::Content;
  if (s == "effectiveness") return Aspect::Effectiveness;
  if (s == "hallucination") return Aspect::Hallucination;
  throw Error(Errc::MalformedConfig, "unknown aspect '" + s + "'");
}

Scale scale_from_string(const std::string& s) {
  if (s == "likert3") return Scale::Likert3;
  if (s == "binary") return Scale::Binary;
  throw Error(Errc::MalformedConfig, "unknown scale '" + s + "'");
}

std::vector<int> valid_scores(Scale s) {
  return s == Scale::Likert3 ? std::vector<int>{0, 1, 2} : std::vector<int>{0, 1};
}

bool score_valid(Scale s, int score) {
  return score >= 0 && score <= (s == Scale::Likert3 ? 2 : 1);
}

RubricSpec::RubricSpec(std::string version, std::vector<DimensionSpec> dimensions)
    : version_(std::move(version)), dimensions_(std::move(dimensions)) {}

const DimensionSpec* RubricSpec::find(const std::string& id) const {
  auto it = std::find_if(dimensions_.begin(), dimensions_.end(),
                         [&](const DimensionSpec& d) { return d.id == id; });
  return it == dimensions_.end() ? nullptr : &*it;
}

std::vector<std::string> RubricSpec::ids() const {
  std::vector<std::string> out;
  out.reserve(dimensions_.size());
  for (const auto& d : dimensions_) out.push_back(d.id);
  return out;
}

std::vector<const DimensionSpec*> RubricSpec::by_aspect(Aspect a) const {
  std::vector<const DimensionSpec*> out;
  for (const auto& d : dimensions_)
    if (d.aspect == a) out.push_back(&d);
  return out;
}

namespace {

void validate_dimension(const DimensionSpec& d) {
  if (d.id.empty()) throw Error(Errc::MalformedConfig, "dimension with empty id");
  if (d.name.empty())
    throw Error(Errc::MalformedConfig, "dimension '" + d.id + "': empty name");
  if (d.description.empty())
    throw Error(Errc::MalformedConfig, "dimension '" + d.id + "': empty description");

  // Aspect fixes the scale: content is Likert3, everything else binary.
  Scale expected = d.aspect == Aspect::Content ? Scale::Likert3 : Scale::Binary;
  if (d.scale != expected)
    throw Error(Errc::MalformedConfig,
                "dimension '" + d.id + "': aspect " + aspect_name(d.aspect) +
                    " requires scale " + scale_name(expected));

  for (int s : valid_scores(d.scale)) {
    auto it = d.score_descriptors.find(s);
    if (it == d.score_descriptors.end() || it->second.empty())
      throw Error(Errc::MissingDescriptor,
                  "dimension '" + d.id + "': missing descriptor for score " +
                      std::to_string(s));
  }
  for (const auto& [s, text] : d.score_descriptors) {
    if (!score_valid(d.scale, s))
      throw Error(Errc::MalformedConfig,
                  "dimension '" + d.id + "': descriptor for score " +
                      std::to_string(s) + " outside " + scale_name(d.scale) +
                      " scale");
    (void)text;
  }
  for (const auto& ex : d.exemplars) {
    if (!score_valid(d.scale, ex.score))
      throw Error(Errc::InvalidExemplar,
                  "dimension '" + d.id + "': exemplar score " +
                      std::to_string(ex.score) + " outside " +
                      scale_name(d.scale) + " scale");
    if (ex.feedback.empty())
      throw Error(Errc::InvalidExemplar,
                  "dimension '" + d.id + "': exemplar with empty feedback");
  }
}

void validate_rubric(const RubricSpec& r) {
  std::set<std::string> seen;
  for (const auto& d : r.dimensions()) {
    validate_dimension(d);
    if (!seen.insert(d.id).second)
      throw Error(Errc::DuplicateId, "duplicate dimension id '" + d.id + "'");
  }
}

}  // namespace

RubricSpec load_rubric(const std::string& config_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(config_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::MalformedConfig, std::string("rubric config: ") + e.what());
  }
  if (!j.is_object() || !j.contains("version") || !j.contains("dimensions"))
    throw Error(Errc::MalformedConfig,
                "rubric config must be an object with 'version' and 'dimensions'");
  if (!j["dimensions"].is_array() || j["dimensions"].empty())
    throw Error(Errc::MalformedConfig, "rubric config: 'dimensions' must be a non-empty array");

  std::vector<DimensionSpec> dims;
  try {
    for (const auto& dj : j["dimensions"]) {
      DimensionSpec d;
      d.id = dj.at("id").get<std::string>();
      d.name = dj.at("name").get<std::string>();
      d.aspect = aspect_from_string(dj.at("aspect").get<std::string>());
      d.scale = scale_from_string(dj.at("scale").get<std::string>());
      d.description = dj.at("description").get<std::string>();
      for (const auto& [key, val] : dj.at("score_descriptors").items())
        d.score_descriptors[std::stoi(key)] = val.get<std::string>();
      if (dj.contains("exemplars")) {
        for (const auto& ej : dj["exemplars"]) {
          Exemplar ex;
          ex.score = ej.at("score").get<int>();
          ex.feedback = ej.at("feedback").get<std::string>();
          ex.rationale = ej.at("rationale").get<std::string>();
          d.exemplars.push_back(std::move(ex));
        }
      }
      dims.push_back(std::move(d));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::MalformedConfig, std::string("rubric config: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw Error(Errc::MalformedConfig, "rubric config: non-integer score key");
  }

  RubricSpec rubric(j["version"].get<std::string>(), std::move(dims));
  validate_rubric(rubric);
  return rubric;
}

std::string serialize_rubric(const RubricSpec& rubric) {
  nlohmann::ordered_json j;
  j["version"] = rubric.version();
  j["dimensions"] = nlohmann::ordered_json::array();
  for (const auto& d : rubric.dimensions()) {
    nlohmann::ordered_json dj;
    dj["id"] = d.id;
    dj["name"] = d.name;
    dj["aspect"] = aspect_name(d.aspect);
    dj["scale"] = scale_name(d.scale);
    dj["description"] = d.description;
    nlohmann::ordered_json descs;
    for (const auto& [s, text] : d.score_descriptors)
      descs[std::to_string(s)] = text;
    dj["score_descriptors"] = std::move(descs);
    nlohmann::ordered_json exs = nlohmann::ordered_json::array();
    for (const auto& ex : d.exemplars) {
      exs.push_back({{"score", ex.score},
                     {"feedback", ex.feedback},
                     {"rationale", ex.rationale}});
    }
    dj["exemplars"] = std::move(exs);
    j["dimensions"].push_back(std::move(dj));
  }
  return j.dump(2) + "\n";
}

}  // namespace dean
