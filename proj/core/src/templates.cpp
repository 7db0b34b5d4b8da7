#include "cellbench/templates.hpp"

#include <utility>

#include "cellbench/error.hpp"

namespace cellbench {

namespace detail {
extern const std::pair<std::string_view, std::string_view> kTemplateTable[];
extern const std::size_t kTemplateCount;
}  // namespace detail

std::string_view template_version() noexcept { return CELLBENCH_TEMPLATE_VERSION; }

std::string_view get_template(std::string_view name) {
  for (std::size_t i = 0; i < detail::kTemplateCount; ++i) {
    if (detail::kTemplateTable[i].first == name) return detail::kTemplateTable[i].second;
  }
  throw Error(ErrorKind::Template, "no template named '" + std::string(name) + "'");
}

std::vector<std::string> template_names() {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < detail::kTemplateCount; ++i) names.emplace_back(detail::kTemplateTable[i].first);
  return names;
}

std::string fill_template(std::string_view body, const std::map<std::string, std::string>& vars) {
  std::string out;
  out.reserve(body.size());
  std::size_t pos = 0;
  while (pos < body.size()) {
    const auto open = body.find("{{", pos);
    if (open == std::string_view::npos) {
      out.append(body.substr(pos));
      break;
    }
    const auto close = body.find("}}", open + 2);
    if (close == std::string_view::npos) throw Error(ErrorKind::Template, "unterminated placeholder");
    out.append(body.substr(pos, open - pos));
    const std::string name(body.substr(open + 2, close - open - 2));
    const auto it = vars.find(name);
    if (it == vars.end()) throw Error(ErrorKind::Template, "missing value for {{" + name + "}}");
    out.append(it->second);
    pos = close + 2;
  }
  return out;
}

}  // namespace cellbench
