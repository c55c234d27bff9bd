#include "ensel/keyvalue.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "ensel/error.hpp"

namespace ensel {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(std::string_view s, char sep) {
    std::vector<std::string> out;
    if (trim(s).empty()) return out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

double parse_double(std::string_view s, std::string_view context) {
    const std::string t = trim(s);
    double value = 0.0;
    const char* begin = t.data();
    const char* end = begin + t.size();
    if (!t.empty() && *begin == '+') ++begin;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (t.empty() || ec != std::errc{} || ptr != end) {
        throw Error(ErrorKind::Parse, "not a number: '" + t + "' (" + std::string(context) + ")");
    }
    return value;
}

KeyValueFile KeyValueFile::parse(std::string_view text) {
    KeyValueFile file;
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        std::string key = trim(std::string_view(t).substr(0, eq));
        std::string value = trim(std::string_view(t).substr(eq + 1));
        if (key.empty()) throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": empty key");
        if (file.get(key)) throw Error(ErrorKind::Parse, "duplicate key '" + key + "'");
        file.entries_.emplace_back(std::move(key), std::move(value));
    }
    return file;
}

KeyValueFile KeyValueFile::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

std::optional<std::string> KeyValueFile::get(std::string_view key) const {
    for (const auto& [k, v] : entries_) {
        if (k == key) return v;
    }
    return std::nullopt;
}

}  // namespace ensel
