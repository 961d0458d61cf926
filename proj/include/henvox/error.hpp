#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hv {

enum class ErrorKind {
  NotWav,
  UnsupportedFormat,
  BadSampleRate,
  ClipTooShort,
  NegativeFrequency,
  FrameCountMismatch,
  SegmentTooShort,
  UnstableLPC,
  DimMismatch,
  EmptyChannel,
  InvalidConfig,
  InvalidLabels,
  EmptyDataset,
  DegenerateLabels,
  TooFewSamples,
  NotFitted,
  MissingClassSamples,
  LengthMismatch,
  TooFewSamplesPerClass,
  IoFailure,
  BadFormat,
};

std::string_view to_string(ErrorKind kind);

// Every failure raised by the library carries one of the kinds above so that
// callers (CLI, bindings, tests) can dispatch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace hv
