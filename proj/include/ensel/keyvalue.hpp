#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ensel {

/// Plain `key = value` text. Blank lines and lines starting with '#' are ignored.
/// Keys keep file order; a repeated key is an error.
class KeyValueFile {
public:
    static KeyValueFile parse(std::string_view text);
    static KeyValueFile load(const std::filesystem::path& path);

    std::optional<std::string> get(std::string_view key) const;
    const std::vector<std::pair<std::string, std::string>>& entries() const noexcept { return entries_; }

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

std::string trim(std::string_view s);
std::vector<std::string> split_list(std::string_view s, char sep = ',');
double parse_double(std::string_view s, std::string_view context);

}  // namespace ensel
