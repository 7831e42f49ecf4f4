#pragma once

#include <functional>
#include <string>

namespace nwbec {

/// Non-fatal numerical warnings (near-pole evaluation, gamma not small, ...).
/// The default handler prints "nwbec warning: <msg>" to stderr.
using WarningHandler = std::function<void(const std::string&)>;

/// Installs a new handler and returns the previous one. Pass nullptr to
/// silence warnings.
WarningHandler set_warning_handler(WarningHandler handler);

void warn(const std::string& message);

}  // namespace nwbec
