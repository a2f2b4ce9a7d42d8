#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dean/corpus.hpp"
#include "dean/prompt.hpp"
#include "dean/rubric.hpp"

namespace dean {

struct ChatMessage {
  std::string role;  // system | user | assistant
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

/// One fine-tuning chat record: system + exactly one user message (the
/// few-shot evaluation prompt) + one assistant message (the expected label
/// block, parseable by parse_labels).
struct FineTuneRecord {
  std::vector<ChatMessage> messages;

  bool operator==(const FineTuneRecord&) const = default;
};

enum class Regime { Plain, Explanatory, Staged };

const char* regime_name(Regime r);
Regime regime_from_string(const std::string& s);

/// Counts and content hashes of everything written by an export.
struct ExportManifest {
  Regime regime = Regime::Plain;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::size_t>> files;  // (filename, record count)
  std::vector<std::pair<std::string, std::string>> hashes;  // (filename, fnv1a64)
};

std::string manifest_to_json(const ExportManifest& manifest);

/// One record per train label: user = few-shot eval prompt, assistant =
/// serialized human labels with the explanation stripped.
std::vector<FineTuneRecord> build_plain_records(const std::vector<LabelRecord>& train,
                                                const Corpus& corpus,
                                                const RubricSpec& rubric);

/// Records for labels carrying explanations: user = few-shot prompt plus the
/// explanatory instruction, assistant = labels followed by the explanation
/// block. Labels without explanations are rejected.
std::vector<FineTuneRecord> build_explanatory_records(
    const std::vector<LabelRecord>& explanatory, const Corpus& corpus,
    const RubricSpec& rubric);

std::string records_to_jsonl(const std::vector<FineTuneRecord>& records);
std::vector<FineTuneRecord> records_from_jsonl(const std::string& text);

/// Writes ft_plain.jsonl plus manifest.json into out_dir.
ExportManifest export_plain(const std::vector<LabelRecord>& train, const Corpus& corpus,
                            const RubricSpec& rubric,
                            const std::filesystem::path& out_dir);

/// Writes ft_explanatory.jsonl plus manifest.json into out_dir.
ExportManifest export_explanatory(const std::vector<LabelRecord>& explanatory,
                                  const Corpus& corpus, const RubricSpec& rubric,
                                  const std::filesystem::path& out_dir);

/// Writes the three ordered stage files: a seeded-random half of the
/// explanatory records (ceil(k/2), the larger half first), all plain
/// records, then the remaining explanatory records. The halves are disjoint
/// and their union is the full explanatory set.
ExportManifest export_staged(const std::vector<LabelRecord>& train, const Corpus& corpus,
                             const RubricSpec& rubric, std::uint64_t seed,
                             const std::filesystem::path& out_dir);

}  // namespace dean
