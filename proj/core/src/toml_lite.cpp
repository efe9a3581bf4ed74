#include "creole/toml_lite.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace creole {

namespace {

std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

// Strips a trailing comment that is not inside a string literal.
std::string stripComment(const std::string& line) {
    bool inStr = false;
    for (size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (c == '"') inStr = !inStr;
        else if (c == '#' && !inStr) return line.substr(0, i);
    }
    return line;
}

std::string parseQuoted(const std::string& s, size_t& i, int lineNo) {
    if (i >= s.size() || s[i] != '"')
        throw TomlError("line " + std::to_string(lineNo) + ": expected '\"'");
    ++i;
    std::string out;
    while (i < s.size() && s[i] != '"') {
        if (s[i] == '\\' && i + 1 < s.size()) {
            ++i;
            switch (s[i]) {
                case 'n': out += '\n'; break;
                case 't': out += '\t'; break;
                case '"': out += '"'; break;
                case '\\': out += '\\'; break;
                default:
                    throw TomlError("line " + std::to_string(lineNo) + ": bad escape");
            }
        } else {
            out += s[i];
        }
        ++i;
    }
    if (i >= s.size())
        throw TomlError("line " + std::to_string(lineNo) + ": unterminated string");
    ++i;  // closing quote
    return out;
}

TomlValue parseValue(const std::string& raw, int lineNo) {
    std::string s = trim(raw);
    if (s.empty()) throw TomlError("line " + std::to_string(lineNo) + ": missing value");
    if (s[0] == '"') {
        size_t i = 0;
        std::string v = parseQuoted(s, i, lineNo);
        if (trim(s.substr(i)).size() != 0)
            throw TomlError("line " + std::to_string(lineNo) + ": trailing characters");
        return TomlValue{v};
    }
    if (s[0] == '[') {
        std::vector<std::string> items;
        size_t i = 1;
        auto skipWs = [&] {
            while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        };
        skipWs();
        while (i < s.size() && s[i] != ']') {
            items.push_back(parseQuoted(s, i, lineNo));
            skipWs();
            if (i < s.size() && s[i] == ',') {
                ++i;
                skipWs();
            }
        }
        if (i >= s.size() || s[i] != ']')
            throw TomlError("line " + std::to_string(lineNo) + ": unterminated array");
        if (trim(s.substr(i + 1)).size() != 0)
            throw TomlError("line " + std::to_string(lineNo) + ": trailing characters");
        return TomlValue{items};
    }
    // Integer.
    try {
        size_t used = 0;
        long long n = std::stoll(s, &used);
        if (used != s.size()) throw std::invalid_argument("");
        return TomlValue{static_cast<std::int64_t>(n)};
    } catch (const std::exception&) {
        throw TomlError("line " + std::to_string(lineNo) + ": unsupported value '" + s + "'");
    }
}

}  // namespace

TomlDoc parseToml(const std::string& text) {
    TomlDoc doc;
    std::string section;
    std::istringstream in(text);
    std::string rawLine;
    int lineNo = 0;
    while (std::getline(in, rawLine)) {
        ++lineNo;
        std::string line = trim(stripComment(rawLine));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw TomlError("line " + std::to_string(lineNo) + ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw TomlError("line " + std::to_string(lineNo) + ": empty section name");
            doc[section];  // a header alone still creates the section
            continue;
        }
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw TomlError("line " + std::to_string(lineNo) + ": expected 'key = value'");
        std::string key = trim(line.substr(0, eq));
        if (key.empty())
            throw TomlError("line " + std::to_string(lineNo) + ": empty key");
        if (section.empty())
            throw TomlError("line " + std::to_string(lineNo) + ": key outside any section");
        doc[section][key] = parseValue(line.substr(eq + 1), lineNo);
    }
    return doc;
}

TomlDoc parseTomlFile(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw TomlError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parseToml(buf.str());
}

}  // namespace creole
