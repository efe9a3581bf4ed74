#ifndef CREOLE_TOML_LITE_HPP
#define CREOLE_TOML_LITE_HPP

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace creole {

// Reader for the TOML subset used by deployment and table-mapping files:
// [section.name] headers, string / integer / string-array values, # comments.
struct TomlValue {
    std::variant<std::string, std::int64_t, std::vector<std::string>> v;

    const std::string& str() const { return std::get<std::string>(v); }
    std::int64_t integer() const { return std::get<std::int64_t>(v); }
    const std::vector<std::string>& list() const { return std::get<std::vector<std::string>>(v); }
};

using TomlSection = std::map<std::string, TomlValue>;
using TomlDoc = std::map<std::string, TomlSection>;  // keyed by full section name

struct TomlError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

TomlDoc parseToml(const std::string& text);
TomlDoc parseTomlFile(const std::string& path);

}  // namespace creole

#endif
