#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace matchkit {

/// Error taxonomy shared by every module. Codes are stable; the CLI and any
/// bindings report them by name.
enum class Errc {
  DimensionMismatch,
  EmptySample,
  InvalidM,
  InvalidK,
  NonFiniteCoordinate,
  GroupTooSmall,
  NonFiniteOutcome,
  BadTreatmentValue,
  InputTooLarge,
  NegativeInput,
  PropensityOutOfRange,
  FoldTooSmall,
  OutsideSupport,
  EmptyRun,
  Malformed,
  Empty,
  InvalidArgument,
  Io,
};

constexpr std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::EmptySample: return "EmptySample";
    case Errc::InvalidM: return "InvalidM";
    case Errc::InvalidK: return "InvalidK";
    case Errc::NonFiniteCoordinate: return "NonFiniteCoordinate";
    case Errc::GroupTooSmall: return "GroupTooSmall";
    case Errc::NonFiniteOutcome: return "NonFiniteOutcome";
    case Errc::BadTreatmentValue: return "BadTreatmentValue";
    case Errc::InputTooLarge: return "InputTooLarge";
    case Errc::NegativeInput: return "NegativeInput";
    case Errc::PropensityOutOfRange: return "PropensityOutOfRange";
    case Errc::FoldTooSmall: return "FoldTooSmall";
    case Errc::OutsideSupport: return "OutsideSupport";
    case Errc::EmptyRun: return "EmptyRun";
    case Errc::Malformed: return "Malformed";
    case Errc::Empty: return "Empty";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace matchkit
