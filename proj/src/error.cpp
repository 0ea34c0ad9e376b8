#include "motility/error.hpp"
#include "motility/log.hpp"

#include <iostream>
#include <mutex>

namespace motility {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::Usage: return "Usage";
    case Errc::Io: return "Io";
    case Errc::BadFormat: return "BadFormat";
    case Errc::MissingColumn: return "MissingColumn";
    case Errc::BadNumeric: return "BadNumeric";
    case Errc::TargetSumOutOfRange: return "TargetSumOutOfRange";
    case Errc::UnreadableFrame: return "UnreadableFrame";
    case Errc::InconsistentDimensions: return "InconsistentDimensions";
    case Errc::VideoTooShort: return "VideoTooShort";
    case Errc::WrongChannelCount: return "WrongChannelCount";
    case Errc::FrameTooSmall: return "FrameTooSmall";
    case Errc::StrideOutOfRange: return "StrideOutOfRange";
    case Errc::MissingConcentration: return "MissingConcentration";
    case Errc::EmptyDataset: return "EmptyDataset";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::SpecShapeError: return "SpecShapeError";
    case Errc::UnknownId: return "UnknownId";
    case Errc::TooFewParticipants: return "TooFewParticipants";
    case Errc::FoldPlanMismatch: return "FoldPlanMismatch";
    case Errc::UnreadableCheckpoint: return "UnreadableCheckpoint";
    case Errc::NonFiniteGradient: return "NonFiniteGradient";
    case Errc::NonFiniteLoss: return "NonFiniteLoss";
  }
  return "Unknown";
}

int exit_code(Errc code) {
  switch (code) {
    case Errc::Usage:
      return 1;
    case Errc::NonFiniteGradient:
    case Errc::NonFiniteLoss:
      return 3;
    default:
      return 2;
  }
}

namespace {

std::mutex g_log_mutex;
LogLevel g_min_level = LogLevel::Info;

void default_sink(LogLevel level, const std::string& message) {
  const char* tag = level == LogLevel::Warn ? "warning: " : "";
  std::cerr << tag << message << '\n';
}

LogSink& sink_ref() {
  static LogSink sink = default_sink;
  return sink;
}

}  // namespace

LogSink set_log_sink(LogSink sink) {
  std::lock_guard lock(g_log_mutex);
  LogSink previous = std::move(sink_ref());
  sink_ref() = sink ? std::move(sink) : LogSink(default_sink);
  return previous;
}

void set_log_level(LogLevel min_level) {
  std::lock_guard lock(g_log_mutex);
  g_min_level = min_level;
}

void log(LogLevel level, const std::string& message) {
  std::lock_guard lock(g_log_mutex);
  // Warnings always reach the sink so captures see them regardless of level.
  if (level < g_min_level && level != LogLevel::Warn) return;
  sink_ref()(level, message);
}

WarningCapture::WarningCapture() {
  previous_ = set_log_sink([this](LogLevel level, const std::string& message) {
    if (level == LogLevel::Warn) {
      ++count_;
      last_ = message;
    }
  });
}

WarningCapture::~WarningCapture() { set_log_sink(std::move(previous_)); }

}  // namespace motility
