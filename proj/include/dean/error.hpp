#pragma once

#include <stdexcept>
#include <string>

namespace dean {

// Stable machine-readable categories. The CLI maps these to exit codes and
// prints them on stderr, so renames break scripts.
enum class Errc {
  MalformedConfig,
  DuplicateId,
  MissingDescriptor,
  InvalidExemplar,
  MissingFile,
  DanglingReference,
  InvalidScore,
  InvalidFraction,
  EmptyInput,
  MissingExemplars,
  TemplateViolation,
  MissingCassette,
  AuthMissing,
  ExhaustedRetries,
  MisalignedIds,
  DegenerateAgreement,
  MissingExplanation,
  InvalidPlan,
  RunAborted,
  IoError,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc category, const std::string& message)
      : std::runtime_error(std::string(errc_name(category)) + ": " + message),
        category_(category) {}

  Errc category() const { return category_; }
  const char* category_name() const { return errc_name(category_); }

 private:
  Errc category_;
};

}  // namespace dean
