#pragma once

#include <functional>
#include <string>

namespace perfcast {

using WarningSink = std::function<void(const std::string&)>;

// Default sink writes "warning: <msg>" to stderr.
void warn(const std::string& message);

// Replaces the process-wide sink; returns the previous one.
WarningSink set_warning_sink(WarningSink sink);

} // namespace perfcast
