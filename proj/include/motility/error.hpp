#pragma once

#include <stdexcept>
#include <string>

namespace motility {

enum class Errc {
  Usage,
  Io,
  BadFormat,
  MissingColumn,
  BadNumeric,
  TargetSumOutOfRange,
  UnreadableFrame,
  InconsistentDimensions,
  VideoTooShort,
  WrongChannelCount,
  FrameTooSmall,
  StrideOutOfRange,
  MissingConcentration,
  EmptyDataset,
  ShapeMismatch,
  SpecShapeError,
  UnknownId,
  TooFewParticipants,
  FoldPlanMismatch,
  UnreadableCheckpoint,
  NonFiniteGradient,
  NonFiniteLoss,
};

const char* errc_name(Errc code);

// Process exit status for an error class: 1 usage, 2 data, 3 numeric.
int exit_code(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code), detail_(what) {}

  Errc code() const noexcept { return code_; }
  // Message without the code prefix, for adding context when rethrowing.
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

}  // namespace motility
