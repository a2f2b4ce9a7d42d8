#pragma once

// Internal JSONL helpers shared by the persistence code paths.

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>

#include "json.hpp"

#include "dean/error.hpp"

namespace dean::jsonl {

inline void for_each_record(const std::filesystem::path& file,
                            const std::function<void(const nlohmann::json&)>& fn) {
  std::ifstream in(file);
  if (!in) throw Error(Errc::MissingFile, "cannot open " + file.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::MalformedConfig, file.string() + ":" +
                                             std::to_string(lineno) + ": " + e.what());
    }
    fn(j);
  }
}

class Writer {
 public:
  explicit Writer(const std::filesystem::path& file) : out_(file) {
    if (!out_) throw Error(Errc::IoError, "cannot write " + file.string());
  }

  void write(const nlohmann::json& j) { out_ << j.dump() << '\n'; }

  void flush() { out_.flush(); }

 private:
  std::ofstream out_;
};

}  // namespace dean::jsonl
