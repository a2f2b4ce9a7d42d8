#include "dean/finetune.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"

#include "dean/error.hpp"
#include "dean/parser.hpp"
#include "dean/rng.hpp"

namespace dean {

namespace {

constexpr const char* kSystemMessage =
    "You are an evaluator of feedback quality for student assignment "
    "submissions.";

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t h) {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

struct ResolvedLabel {
  const LabelRecord* label;
  const FeedbackInstance* feedback;
  const Submission* submission;
  const Assignment* assignment;
};

ResolvedLabel resolve(const LabelRecord& label, const Corpus& corpus) {
  ResolvedLabel r{&label, nullptr, nullptr, nullptr};
  r.feedback = corpus.find_feedback(label.feedback_id);
  if (!r.feedback)
    throw Error(Errc::DanglingReference,
                "label references missing feedback '" + label.feedback_id + "'");
  r.submission = corpus.find_submission(r.feedback->submission_id);
  if (!r.submission)
    throw Error(Errc::DanglingReference, "feedback '" + r.feedback->id +
                                             "' references missing submission '" +
                                             r.feedback->submission_id + "'");
  r.assignment = corpus.find_assignment(r.submission->assignment_id);
  if (!r.assignment)
    throw Error(Errc::DanglingReference, "submission '" + r.submission->id +
                                             "' references missing assignment '" +
                                             r.submission->assignment_id + "'");
  return r;
}

std::vector<LabelRecord> sorted_by_feedback_id(std::vector<LabelRecord> labels) {
  std::sort(labels.begin(), labels.end(),
            [](const LabelRecord& a, const LabelRecord& b) {
              return a.feedback_id < b.feedback_id;
            });
  return labels;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out << content;
}

void add_file(ExportManifest& manifest, const std::string& name, std::size_t count,
              const std::string& content) {
  manifest.files.emplace_back(name, count);
  manifest.hashes.emplace_back(name, hex64(fnv1a64(content)));
}

}  // namespace

const char* regime_name(Regime r) {
  switch (r) {
    case Regime::Plain: return "plain";
    case Regime::Explanatory: return "explanatory";
    case Regime::Staged: return "staged";
  }
  return "plain";
}

Regime regime_from_string(const std::string& s) {
  if (s == "plain") return Regime::Plain;
  if (s == "explanatory") return Regime::Explanatory;
  if (s == "staged") return Regime::Staged;
  throw Error(Errc::MalformedConfig, "unknown regime '" + s + "'");
}

std::string manifest_to_json(const ExportManifest& manifest) {
  nlohmann::ordered_json j;
  j["regime"] = regime_name(manifest.regime);
  j["seed"] = manifest.seed;
  nlohmann::ordered_json files = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < manifest.files.size(); ++i) {
    files.push_back({{"name", manifest.files[i].first},
                     {"records", manifest.files[i].second},
                     {"fnv1a64", manifest.hashes[i].second}});
  }
  j["files"] = std::move(files);
  // n_epochs=2 is a recommendation recorded for operators; the exporter
  // never launches fine-tuning jobs.
  j["recommended_hyperparameters"] = {{"n_epochs", 2}};
  return j.dump(2) + "\n";
}

std::vector<FineTuneRecord> build_plain_records(const std::vector<LabelRecord>& train,
                                                const Corpus& corpus,
                                                const RubricSpec& rubric) {
  std::vector<FineTuneRecord> records;
  for (const auto& label : sorted_by_feedback_id(train)) {
    ResolvedLabel r = resolve(label, corpus);
    const EvalPrompt prompt = build_eval_prompt(*r.assignment, *r.submission, *r.feedback,
                                                rubric, PromptMode::FewShot);
    LabelRecord plain = label;
    plain.explanation.reset();
    FineTuneRecord record;
    record.messages.push_back(ChatMessage{"system", kSystemMessage});
    record.messages.push_back(ChatMessage{"user", prompt.text});
    record.messages.push_back(ChatMessage{"assistant", serialize_labels(plain, rubric)});
    records.push_back(std::move(record));
  }
  return records;
}

std::vector<FineTuneRecord> build_explanatory_records(
    const std::vector<LabelRecord>& explanatory, const Corpus& corpus,
    const RubricSpec& rubric) {
  std::vector<FineTuneRecord> records;
  for (const auto& label : sorted_by_feedback_id(explanatory)) {
    if (!label.explanation || label.explanation->empty())
      throw Error(Errc::MissingExplanation,
                  "label for feedback '" + label.feedback_id + "' has no explanation");
    ResolvedLabel r = resolve(label, corpus);
    const EvalPrompt prompt = build_eval_prompt(*r.assignment, *r.submission, *r.feedback,
                                                rubric, PromptMode::FewShot);
    FineTuneRecord record;
    record.messages.push_back(ChatMessage{"system", kSystemMessage});
    record.messages.push_back(ChatMessage{"user", prompt.text + "\n" + explanatory_suffix()});
    record.messages.push_back(ChatMessage{"assistant", serialize_labels(label, rubric)});
    records.push_back(std::move(record));
  }
  return records;
}

std::string records_to_jsonl(const std::vector<FineTuneRecord>& records) {
  std::ostringstream out;
  for (const auto& record : records) {
    nlohmann::ordered_json j;
    j["messages"] = nlohmann::ordered_json::array();
    for (const auto& m : record.messages)
      j["messages"].push_back({{"role", m.role}, {"content", m.content}});
    out << j.dump() << '\n';
  }
  return out.str();
}

std::vector<FineTuneRecord> records_from_jsonl(const std::string& text) {
  std::vector<FineTuneRecord> records;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::MalformedConfig, std::string("fine-tune record: ") + e.what());
    }
    FineTuneRecord record;
    for (const auto& mj : j.at("messages"))
      record.messages.push_back(ChatMessage{
          mj.at("role").get<std::string>(), mj.at("content").get<std::string>()});
    records.push_back(std::move(record));
  }
  return records;
}

ExportManifest export_plain(const std::vector<LabelRecord>& train, const Corpus& corpus,
                            const RubricSpec& rubric,
                            const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const auto records = build_plain_records(train, corpus, rubric);
  const auto content = records_to_jsonl(records);
  write_file(out_dir / "ft_plain.jsonl", content);

  ExportManifest manifest;
  manifest.regime = Regime::Plain;
  add_file(manifest, "ft_plain.jsonl", records.size(), content);
  write_file(out_dir / "manifest.json", manifest_to_json(manifest));
  return manifest;
}

ExportManifest export_explanatory(const std::vector<LabelRecord>& explanatory,
                                  const Corpus& corpus, const RubricSpec& rubric,
                                  const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const auto records = build_explanatory_records(explanatory, corpus, rubric);
  const auto content = records_to_jsonl(records);
  write_file(out_dir / "ft_explanatory.jsonl", content);

  ExportManifest manifest;
  manifest.regime = Regime::Explanatory;
  add_file(manifest, "ft_explanatory.jsonl", records.size(), content);
  write_file(out_dir / "manifest.json", manifest_to_json(manifest));
  return manifest;
}

ExportManifest export_staged(const std::vector<LabelRecord>& train, const Corpus& corpus,
                             const RubricSpec& rubric, std::uint64_t seed,
                             const std::filesystem::path& out_dir) {
  std::vector<LabelRecord> explanatory;
  for (const auto& label : train)
    if (label.explanation && !label.explanation->empty()) explanatory.push_back(label);
  if (explanatory.empty())
    throw Error(Errc::EmptyInput, "staged export requires explanatory labels");

  explanatory = sorted_by_feedback_id(std::move(explanatory));
  Rng rng(seed);
  rng.shuffle(explanatory);
  const std::size_t first_half = (explanatory.size() + 1) / 2;  // larger half first
  std::vector<LabelRecord> half1(explanatory.begin(),
                                 explanatory.begin() + static_cast<std::ptrdiff_t>(first_half));
  std::vector<LabelRecord> half2(explanatory.begin() + static_cast<std::ptrdiff_t>(first_half),
                                 explanatory.end());

  std::filesystem::create_directories(out_dir);
  ExportManifest manifest;
  manifest.regime = Regime::Staged;
  manifest.seed = seed;

  const auto stage1 = records_to_jsonl(build_explanatory_records(half1, corpus, rubric));
  const auto stage2 = records_to_jsonl(build_plain_records(train, corpus, rubric));
  const auto stage3 = records_to_jsonl(build_explanatory_records(half2, corpus, rubric));
  write_file(out_dir / "ft_staged_1.jsonl", stage1);
  write_file(out_dir / "ft_staged_2.jsonl", stage2);
  write_file(out_dir / "ft_staged_3.jsonl", stage3);
  add_file(manifest, "ft_staged_1.jsonl", half1.size(), stage1);
  add_file(manifest, "ft_staged_2.jsonl", train.size(), stage2);
  add_file(manifest, "ft_staged_3.jsonl", half2.size(), stage3);
  write_file(out_dir / "manifest.json", manifest_to_json(manifest));
  return manifest;
}

}  // namespace dean
