#include "dspn/log.hpp"

#include <iostream>
#include <mutex>

namespace dspn::log {
namespace {

std::mutex g_mutex;
bool g_quiet = false;
int g_capture_depth = 0;
std::vector<std::string> g_captured;

}  // namespace

void warn(const std::string& msg) {
  std::lock_guard lock(g_mutex);
  if (g_capture_depth > 0) {
    g_captured.push_back(msg);
    return;
  }
  if (!g_quiet) std::cerr << "warning: " << msg << '\n';
}

void set_quiet(bool quiet) {
  std::lock_guard lock(g_mutex);
  g_quiet = quiet;
}

WarningCapture::WarningCapture() {
  std::lock_guard lock(g_mutex);
  if (g_capture_depth++ == 0) g_captured.clear();
}

WarningCapture::~WarningCapture() {
  std::lock_guard lock(g_mutex);
  --g_capture_depth;
}

std::vector<std::string> WarningCapture::messages() const {
  std::lock_guard lock(g_mutex);
  return g_captured;
}

bool WarningCapture::contains(const std::string& needle) const {
  std::lock_guard lock(g_mutex);
  for (const auto& m : g_captured)
    if (m.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace dspn::log
