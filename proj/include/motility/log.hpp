#pragma once

#include <functional>
#include <string>

namespace motility {

enum class LogLevel { Debug = 0, Info = 1, Warn = 2 };

using LogSink = std::function<void(LogLevel, const std::string&)>;

// Replaces the process-wide sink and returns the previous one. The default
// sink writes warnings and info lines to stderr.
LogSink set_log_sink(LogSink sink);
void set_log_level(LogLevel min_level);

void log(LogLevel level, const std::string& message);
inline void warn(const std::string& message) { log(LogLevel::Warn, message); }
inline void info(const std::string& message) { log(LogLevel::Info, message); }

// Captures warnings for the lifetime of the object. Used by tests.
class WarningCapture {
 public:
  WarningCapture();
  ~WarningCapture();
  WarningCapture(const WarningCapture&) = delete;
  WarningCapture& operator=(const WarningCapture&) = delete;

  int count() const { return count_; }
  const std::string& last() const { return last_; }

 private:
  LogSink previous_;
  int count_ = 0;
  std::string last_;
};

}  // namespace motility
