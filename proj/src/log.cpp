#include "perfcast/log.hpp"

#include <iostream>
#include <mutex>
#include <utility>

namespace perfcast {

namespace {

std::mutex sink_mutex;

WarningSink& sink()
{
  static WarningSink s = [](const std::string& msg) { std::cerr << "warning: " << msg << '\n'; };
  return s;
}

} // namespace

void warn(const std::string& message)
{
  std::lock_guard lock(sink_mutex);
  if (sink()) sink()(message);
}

WarningSink set_warning_sink(WarningSink next)
{
  std::lock_guard lock(sink_mutex);
  return std::exchange(sink(), std::move(next));
}

} // namespace perfcast
