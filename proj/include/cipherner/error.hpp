#ifndef CIPHERNER_ERROR_HPP
#define CIPHERNER_ERROR_HPP

#include <stdexcept>
#include <string>

namespace cipherner {

enum class ErrorCode {
  // corpus
  EmptyCorpus,
  MalformedLine,
  InvalidLabel,
  InvalidTransition,
  ShapeMismatch,
  ConfigInvalid,
  // cipher
  OutOfAlphabet,
  NonInvertibleA,
  CollisionDetected,
  UnknownToken,
  FingerprintMismatch,
  UnknownCiphertext,
  BundleInvalid,
  // abe
  EmptyAttributeSet,
  SyntaxError,
  ThresholdOutOfRange,
  DuplicateX,
  AccessDenied,
  AuthenticationFailure,
  MalformedCiphertext,
  // nn
  NonFiniteInput,
  IndexOutOfRange,
  GoldViolatesConstraints,
  NoFeasiblePath,
  // ner
  IncompleteTagset,
  EmptyInput,
  SchemeMismatch,
  // io
  IoError,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::InvalidLabel: return "InvalidLabel";
    case ErrorCode::InvalidTransition: return "InvalidTransition";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::OutOfAlphabet: return "OutOfAlphabet";
    case ErrorCode::NonInvertibleA: return "NonInvertibleA";
    case ErrorCode::CollisionDetected: return "CollisionDetected";
    case ErrorCode::UnknownToken: return "UnknownToken";
    case ErrorCode::FingerprintMismatch: return "FingerprintMismatch";
    case ErrorCode::UnknownCiphertext: return "UnknownCiphertext";
    case ErrorCode::BundleInvalid: return "BundleInvalid";
    case ErrorCode::EmptyAttributeSet: return "EmptyAttributeSet";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::ThresholdOutOfRange: return "ThresholdOutOfRange";
    case ErrorCode::DuplicateX: return "DuplicateX";
    case ErrorCode::AccessDenied: return "AccessDenied";
    case ErrorCode::AuthenticationFailure: return "AuthenticationFailure";
    case ErrorCode::MalformedCiphertext: return "MalformedCiphertext";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::GoldViolatesConstraints: return "GoldViolatesConstraints";
    case ErrorCode::NoFeasiblePath: return "NoFeasiblePath";
    case ErrorCode::IncompleteTagset: return "IncompleteTagset";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::SchemeMismatch: return "SchemeMismatch";
    case ErrorCode::IoError: return "IoError";
  }
  return "Error";
}

}  // namespace cipherner

#endif  // CIPHERNER_ERROR_HPP
