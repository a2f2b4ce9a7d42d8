#include "dean/corpus.hpp"

#include <algorithm>
#include <cmath>

#include "dean/error.hpp"
#include "dean/rng.hpp"
#include "jsonl.hpp"

namespace dean {

namespace {

nlohmann::json assignment_to_json(const Assignment& a) {
  return {{"id", a.id}, {"course_id", a.course_id}, {"description", a.description}};
}

Assignment assignment_from_json(const nlohmann::json& j) {
  Assignment a;
  a.id = j.at("id").get<std::string>();
  a.course_id = j.at("course_id").get<std::string>();
  a.description = j.at("description").get<std::string>();
  return a;
}

nlohmann::json submission_to_json(const Submission& s) {
  nlohmann::json j{{"id", s.id}, {"assignment_id", s.assignment_id}, {"body", s.body}};
  if (!s.origin.empty()) j["origin"] = s.origin;
  return j;
}

Submission submission_from_json(const nlohmann::json& j) {
  Submission s;
  s.id = j.at("id").get<std::string>();
  s.assignment_id = j.at("assignment_id").get<std::string>();
  s.body = j.at("body").get<std::string>();
  s.origin = j.value("origin", "");
  return s;
}

nlohmann::json feedback_to_json(const FeedbackInstance& f) {
  nlohmann::json gp{{"temperature", f.generation_params.temperature},
                    {"timestamp", f.generation_params.timestamp}};
  if (f.generation_params.reasoning_effort)
    gp["reasoning_effort"] = *f.generation_params.reasoning_effort;
  return {{"id", f.id},
          {"submission_id", f.submission_id},
          {"tutor_model", f.tutor_model},
          {"text", f.text},
          {"generation_params", gp}};
}

FeedbackInstance feedback_from_json(const nlohmann::json& j) {
  FeedbackInstance f;
  f.id = j.at("id").get<std::string>();
  f.submission_id = j.at("submission_id").get<std::string>();
  f.tutor_model = j.at("tutor_model").get<std::string>();
  f.text = j.at("text").get<std::string>();
  if (j.contains("generation_params")) {
    const auto& gp = j["generation_params"];
    f.generation_params.temperature = gp.value("temperature", 0.0);
    f.generation_params.timestamp = gp.value("timestamp", "");
    if (gp.contains("reasoning_effort"))
      f.generation_params.reasoning_effort = gp["reasoning_effort"].get<std::string>();
  }
  return f;
}

nlohmann::json label_to_json(const LabelRecord& l) {
  nlohmann::json j{{"feedback_id", l.feedback_id}, {"rater", l.rater}, {"scores", l.scores}};
  if (l.explanation) j["explanation"] = *l.explanation;
  return j;
}

LabelRecord label_from_json(const nlohmann::json& j) {
  LabelRecord l;
  l.feedback_id = j.at("feedback_id").get<std::string>();
  l.rater = j.at("rater").get<std::string>();
  for (const auto& [k, v] : j.at("scores").items()) l.scores[k] = v.get<int>();
  if (j.contains("explanation")) l.explanation = j["explanation"].get<std::string>();
  return l;
}

}  // namespace

void validate_label(const LabelRecord& label, const RubricSpec& rubric) {
  for (const auto& dim : rubric.dimensions()) {
    auto it = label.scores.find(dim.id);
    if (it == label.scores.end())
      throw Error(Errc::InvalidScore, "label for feedback '" + label.feedback_id +
                                          "': missing dimension '" + dim.id + "'");
    if (!score_valid(dim.scale, it->second))
      throw Error(Errc::InvalidScore,
                  "label for feedback '" + label.feedback_id + "': score " +
                      std::to_string(it->second) + " invalid for " +
                      scale_name(dim.scale) + " dimension '" + dim.id + "'");
  }
  if (label.scores.size() != rubric.size())
    for (const auto& [id, score] : label.scores)
      if (!rubric.find(id))
        throw Error(Errc::InvalidScore, "label for feedback '" + label.feedback_id +
                                            "': unknown dimension '" + id + "'");
}

std::size_t SplitAssignment::train_count() const {
  return static_cast<std::size_t>(
      std::count_if(side.begin(), side.end(),
                    [](const auto& kv) { return kv.second == SplitSide::Train; }));
}

std::size_t SplitAssignment::test_count() const { return side.size() - train_count(); }

const Assignment* Corpus::find_assignment(const std::string& id) const {
  auto it = assignment_index_.find(id);
  return it == assignment_index_.end() ? nullptr : &assignments_[it->second];
}

const Submission* Corpus::find_submission(const std::string& id) const {
  auto it = submission_index_.find(id);
  return it == submission_index_.end() ? nullptr : &submissions_[it->second];
}

const FeedbackInstance* Corpus::find_feedback(const std::string& id) const {
  auto it = feedback_index_.find(id);
  return it == feedback_index_.end() ? nullptr : &feedback_[it->second];
}

const Assignment* Corpus::assignment_of_submission(const std::string& submission_id) const {
  const Submission* s = find_submission(submission_id);
  return s ? find_assignment(s->assignment_id) : nullptr;
}

void Corpus::add_assignment(Assignment a) {
  if (assignment_index_.count(a.id))
    throw Error(Errc::DuplicateId, "duplicate assignment id '" + a.id + "'");
  assignment_index_[a.id] = assignments_.size();
  assignments_.push_back(std::move(a));
}

void Corpus::add_submission(Submission s) {
  if (submission_index_.count(s.id))
    throw Error(Errc::DuplicateId, "duplicate submission id '" + s.id + "'");
  submission_index_[s.id] = submissions_.size();
  submissions_.push_back(std::move(s));
}

void Corpus::add_feedback(FeedbackInstance f) {
  if (feedback_index_.count(f.id))
    throw Error(Errc::DuplicateId, "duplicate feedback id '" + f.id + "'");
  if (f.text.empty())
    throw Error(Errc::MalformedConfig, "feedback '" + f.id + "': empty text");
  feedback_index_[f.id] = feedback_.size();
  feedback_.push_back(std::move(f));
}

void Corpus::add_label(LabelRecord l) { labels_.push_back(std::move(l)); }

void Corpus::validate(const RubricSpec* rubric) const {
  for (const auto& a : assignments_)
    if (a.description.empty())
      throw Error(Errc::MalformedConfig, "assignment '" + a.id + "': empty description");
  for (const auto& s : submissions_)
    if (!find_assignment(s.assignment_id))
      throw Error(Errc::DanglingReference, "submission '" + s.id +
                                               "' references missing assignment '" +
                                               s.assignment_id + "'");
  for (const auto& f : feedback_)
    if (!find_submission(f.submission_id))
      throw Error(Errc::DanglingReference, "feedback '" + f.id +
                                               "' references missing submission '" +
                                               f.submission_id + "'");
  for (const auto& l : labels_) {
    if (!find_feedback(l.feedback_id))
      throw Error(Errc::DanglingReference,
                  "label references missing feedback '" + l.feedback_id + "'");
    if (rubric) validate_label(l, *rubric);
  }
}

Corpus load_corpus(const std::filesystem::path& dir, const RubricSpec* rubric) {
  Corpus c;
  jsonl::for_each_record(dir / "assignments.jsonl", [&](const nlohmann::json& j) {
    c.add_assignment(assignment_from_json(j));
  });
  jsonl::for_each_record(dir / "submissions.jsonl", [&](const nlohmann::json& j) {
    c.add_submission(submission_from_json(j));
  });
  if (std::filesystem::exists(dir / "feedback.jsonl"))
    jsonl::for_each_record(dir / "feedback.jsonl", [&](const nlohmann::json& j) {
      c.add_feedback(feedback_from_json(j));
    });
  if (std::filesystem::exists(dir / "labels.jsonl"))
    jsonl::for_each_record(dir / "labels.jsonl", [&](const nlohmann::json& j) {
      c.add_label(label_from_json(j));
    });
  c.validate(rubric);
  return c;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    jsonl::Writer w(dir / "assignments.jsonl");
    for (const auto& a : corpus.assignments()) w.write(assignment_to_json(a));
  }
  {
    jsonl::Writer w(dir / "submissions.jsonl");
    for (const auto& s : corpus.submissions()) w.write(submission_to_json(s));
  }
  {
    jsonl::Writer w(dir / "feedback.jsonl");
    for (const auto& f : corpus.feedback()) w.write(feedback_to_json(f));
  }
  {
    jsonl::Writer w(dir / "labels.jsonl");
    for (const auto& l : corpus.labels()) w.write(label_to_json(l));
  }
}

std::vector<LabelRecord> load_labels(const std::filesystem::path& file) {
  std::vector<LabelRecord> out;
  jsonl::for_each_record(file, [&](const nlohmann::json& j) {
    out.push_back(label_from_json(j));
  });
  return out;
}

void save_labels(const std::vector<LabelRecord>& labels, const std::filesystem::path& file) {
  jsonl::Writer w(file);
  for (const auto& l : labels) w.write(label_to_json(l));
}

std::vector<FeedbackInstance> load_feedback_file(const std::filesystem::path& file) {
  std::vector<FeedbackInstance> out;
  jsonl::for_each_record(file, [&](const nlohmann::json& j) {
    out.push_back(feedback_from_json(j));
  });
  return out;
}

void save_feedback_file(const std::vector<FeedbackInstance>& feedback,
                        const std::filesystem::path& file) {
  jsonl::Writer w(file);
  for (const auto& f : feedback) w.write(feedback_to_json(f));
}

SplitAssignment load_split(const std::filesystem::path& file) {
  SplitAssignment split;
  jsonl::for_each_record(file, [&](const nlohmann::json& j) {
    const auto id = j.at("feedback_id").get<std::string>();
    const auto side = j.at("side").get<std::string>();
    if (side != "train" && side != "test")
      throw Error(Errc::MalformedConfig, "split side must be train or test");
    split.side[id] = side == "train" ? SplitSide::Train : SplitSide::Test;
  });
  return split;
}

void save_split(const SplitAssignment& split, const std::filesystem::path& file) {
  jsonl::Writer w(file);
  for (const auto& [id, side] : split.side)
    w.write({{"feedback_id", id}, {"side", side == SplitSide::Train ? "train" : "test"}});
}

SplitAssignment stratified_split(const std::vector<LabelRecord>& labels,
                                 const Corpus& corpus, double train_fraction,
                                 std::uint64_t seed) {
  if (labels.empty()) throw Error(Errc::EmptyInput, "stratified_split: empty label set");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw Error(Errc::InvalidFraction,
                "train_fraction must lie in (0,1), got " + std::to_string(train_fraction));

  // Strata keyed by tutor model, iterated in sorted order for determinism.
  std::map<std::string, std::vector<std::string>> strata;
  for (const auto& l : labels) {
    const FeedbackInstance* f = corpus.find_feedback(l.feedback_id);
    if (!f)
      throw Error(Errc::DanglingReference,
                  "label references missing feedback '" + l.feedback_id + "'");
    strata[f->tutor_model].push_back(l.feedback_id);
  }

  std::size_t total = 0;
  for (auto& [model, ids] : strata) {
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    total += ids.size();
  }

  // Largest-remainder apportionment: per-stratum train counts are floor or
  // ceil of the exact proportion and sum to round(fraction * total).
  const auto target = static_cast<std::size_t>(std::llround(train_fraction * total));
  std::size_t floor_sum = 0;
  std::vector<std::pair<double, std::string>> remainders;  // (-remainder, model)
  std::map<std::string, std::size_t> train_counts;
  for (const auto& [model, ids] : strata) {
    double exact = train_fraction * static_cast<double>(ids.size());
    auto fl = static_cast<std::size_t>(std::floor(exact));
    train_counts[model] = fl;
    floor_sum += fl;
    remainders.emplace_back(-(exact - static_cast<double>(fl)), model);
  }
  std::sort(remainders.begin(), remainders.end());
  for (std::size_t i = 0; i + floor_sum < target && i < remainders.size(); ++i)
    ++train_counts[remainders[i].second];

  SplitAssignment split;
  Rng rng(seed);
  for (auto& [model, ids] : strata) {
    rng.shuffle(ids);
    std::size_t k = std::min(train_counts[model], ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i)
      split.side[ids[i]] = i < k ? SplitSide::Train : SplitSide::Test;
  }
  return split;
}

}  // namespace dean
