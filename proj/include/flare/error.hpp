#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace flare {

enum class ErrorKind {
  MissingHeader,
  NonNumericField,
  NegativeTimestamp,
  ZeroSize,
  MalformedStation,
  UnknownStation,
  MalformedTraceFile,
  EmptyTrace,
  InvalidConfig,
  EmptyInput,
  EmptyWindow,
  InvalidDataset,
  SingleClass,
  TooFewSamples,
  EmptyGrid,
  DimensionMismatch,
  LengthMismatch,
  UnlabeledWindow,
  InsufficientData,
  FilteredWindow,
  WrongRunCount,
  UnknownModelName,
  BinMismatch,
  InvalidSpec,
  InvalidThroughput,
  MalformedModel,
  Io,
};

std::string_view to_string(ErrorKind kind);

/// Library-wide exception. `line()` is set for parse errors that can be
/// pinned to an input line (1-based, header is line 1).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message,
        std::optional<std::size_t> line = std::nullopt);

  ErrorKind kind() const noexcept { return kind_; }
  std::optional<std::size_t> line() const noexcept { return line_; }

 private:
  ErrorKind kind_;
  std::optional<std::size_t> line_;
};

}  // namespace flare
