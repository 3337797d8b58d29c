#include "flare/error.hpp"

namespace flare {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MissingHeader: return "MissingHeader";
    case ErrorKind::NonNumericField: return "NonNumericField";
    case ErrorKind::NegativeTimestamp: return "NegativeTimestamp";
    case ErrorKind::ZeroSize: return "ZeroSize";
    case ErrorKind::MalformedStation: return "MalformedStation";
    case ErrorKind::UnknownStation: return "UnknownStation";
    case ErrorKind::MalformedTraceFile: return "MalformedTraceFile";
    case ErrorKind::EmptyTrace: return "EmptyTrace";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::EmptyWindow: return "EmptyWindow";
    case ErrorKind::InvalidDataset: return "InvalidDataset";
    case ErrorKind::SingleClass: return "SingleClass";
    case ErrorKind::TooFewSamples: return "TooFewSamples";
    case ErrorKind::EmptyGrid: return "EmptyGrid";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::UnlabeledWindow: return "UnlabeledWindow";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::FilteredWindow: return "FilteredWindow";
    case ErrorKind::WrongRunCount: return "WrongRunCount";
    case ErrorKind::UnknownModelName: return "UnknownModelName";
    case ErrorKind::BinMismatch: return "BinMismatch";
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::InvalidThroughput: return "InvalidThroughput";
    case ErrorKind::MalformedModel: return "MalformedModel";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

namespace {

std::string decorate(ErrorKind kind, const std::string& message,
                     std::optional<std::size_t> line) {
  std::string out(to_string(kind));
  if (line) out += " (line " + std::to_string(*line) + ")";
  out += ": ";
  out += message;
  return out;
}

}  // namespace

Error::Error(ErrorKind kind, const std::string& message,
             std::optional<std::size_t> line)
    : std::runtime_error(decorate(kind, message, line)), kind_(kind), line_(line) {}

}  // namespace flare
