#include "dean/error.hpp"

namespace dean {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::MalformedConfig: return "MalformedConfig";
    case Errc::DuplicateId: return "DuplicateId";
    case Errc::MissingDescriptor: return "MissingDescriptor";
    case Errc::InvalidExemplar: return "InvalidExemplar";
    case Errc::MissingFile: return "MissingFile";
    case Errc::DanglingReference: return "DanglingReference";
    case Errc::InvalidScore: return "InvalidScore";
    case Errc::InvalidFraction: return "InvalidFraction";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::MissingExemplars: return "MissingExemplars";
    case Errc::TemplateViolation: return "TemplateViolation";
    case Errc::MissingCassette: return "MissingCassette";
    case Errc::AuthMissing: return "AuthMissing";
    case Errc::ExhaustedRetries: return "ExhaustedRetries";
    case Errc::MisalignedIds: return "MisalignedIds";
    case Errc::DegenerateAgreement: return "DegenerateAgreement";
    case Errc::MissingExplanation: return "MissingExplanation";
    case Errc::InvalidPlan: return "InvalidPlan";
    case Errc::RunAborted: return "RunAborted";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace dean
