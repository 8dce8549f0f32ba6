#pragma once

#include <string>
#include <vector>

namespace dspn::log {

// Warnings go to stderr unless silenced. A WarningCapture collects every
// warning raised (from any thread) while it is alive.
void warn(const std::string& msg);

void set_quiet(bool quiet);

class WarningCapture {
 public:
  WarningCapture();
  ~WarningCapture();
  WarningCapture(const WarningCapture&) = delete;
  WarningCapture& operator=(const WarningCapture&) = delete;

  std::vector<std::string> messages() const;
  bool contains(const std::string& needle) const;
};

}  // namespace dspn::log
