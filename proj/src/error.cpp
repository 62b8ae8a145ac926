#include "kgalign/error.hpp"

namespace kgalign {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::DuplicateId: return "DuplicateId";
    case ErrorKind::DanglingReference: return "DanglingReference";
    case ErrorKind::IntegrityError: return "IntegrityError";
    case ErrorKind::ShapeError: return "ShapeError";
    case ErrorKind::ValueError: return "ValueError";
    case ErrorKind::UnknownEntity: return "UnknownEntity";
    case ErrorKind::EmptyEval: return "EmptyEval";
    case ErrorKind::AttributeUnknown: return "AttributeUnknown";
    case ErrorKind::RelationUnknown: return "RelationUnknown";
    case ErrorKind::EmptyCandidates: return "EmptyCandidates";
    case ErrorKind::TooManyOptions: return "TooManyOptions";
    case ErrorKind::TransportError: return "TransportError";
    case ErrorKind::ApiError: return "ApiError";
    case ErrorKind::RunAborted: return "RunAborted";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

namespace {

std::string decorate(ErrorKind kind, const std::string& message,
                     std::optional<std::size_t> line) {
  std::string out = to_string(kind);
  if (line) out += " (line " + std::to_string(*line) + ")";
  out += ": ";
  out += message;
  return out;
}

}  // namespace

Error::Error(ErrorKind kind, const std::string& message, std::optional<std::size_t> line)
    : std::runtime_error(decorate(kind, message, line)), kind_(kind), line_(line) {}

}  // namespace kgalign
