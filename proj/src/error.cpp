#include "henvox/error.hpp"

namespace hv {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NotWav: return "NotWav";
    case ErrorKind::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorKind::BadSampleRate: return "BadSampleRate";
    case ErrorKind::ClipTooShort: return "ClipTooShort";
    case ErrorKind::NegativeFrequency: return "NegativeFrequency";
    case ErrorKind::FrameCountMismatch: return "FrameCountMismatch";
    case ErrorKind::SegmentTooShort: return "SegmentTooShort";
    case ErrorKind::UnstableLPC: return "UnstableLPC";
    case ErrorKind::DimMismatch: return "DimMismatch";
    case ErrorKind::EmptyChannel: return "EmptyChannel";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::InvalidLabels: return "InvalidLabels";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::DegenerateLabels: return "DegenerateLabels";
    case ErrorKind::TooFewSamples: return "TooFewSamples";
    case ErrorKind::NotFitted: return "NotFitted";
    case ErrorKind::MissingClassSamples: return "MissingClassSamples";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::TooFewSamplesPerClass: return "TooFewSamplesPerClass";
    case ErrorKind::IoFailure: return "IoFailure";
    case ErrorKind::BadFormat: return "BadFormat";
  }
  return "Unknown";
}

}  // namespace hv
