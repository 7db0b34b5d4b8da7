#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace cellbench {

/// Version tag of the embedded prompt assets, stamped into reports.
std::string_view template_version() noexcept;

/// Throws Template for unknown names.
std::string_view get_template(std::string_view name);
std::vector<std::string> template_names();

/// Replaces every {{name}} placeholder. A placeholder without a value throws Template.
std::string fill_template(std::string_view body, const std::map<std::string, std::string>& vars);

}  // namespace cellbench
