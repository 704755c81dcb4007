#pragma once

#include <functional>
#include <string>

namespace mash {

/// Library warnings go to stderr unless a sink is installed.
using WarningSink = std::function<void(const std::string&)>;
void set_warning_sink(WarningSink sink);
void log_warning(const std::string& message);

}  // namespace mash
