#pragma once

#include <functional>
#include <string>
#include <vector>

namespace cerfgp {

using WarningHandler = std::function<void(const std::string&)>;

/// Reports a recoverable condition (fallbacks, clamping, floored eigenvalues).
/// Thread-safe; the default handler writes to standard error.
void warn(const std::string& message);

/// Installs a handler and returns the previous one.
WarningHandler set_warning_handler(WarningHandler handler);

/// Captures warnings for the lifetime of the object, restoring the previous
/// handler on destruction.
class ScopedWarningCapture {
 public:
  ScopedWarningCapture();
  ~ScopedWarningCapture();
  ScopedWarningCapture(const ScopedWarningCapture&) = delete;
  ScopedWarningCapture& operator=(const ScopedWarningCapture&) = delete;

  const std::vector<std::string>& messages() const { return messages_; }

 private:
  std::vector<std::string> messages_;
  WarningHandler previous_;
};

}  // namespace cerfgp
