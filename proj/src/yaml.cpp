#include "ctf/yaml.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace ctf {

namespace {

struct Line {
    int indent;
    std::string text;
};

std::string strip_comment(const std::string& raw) {
    bool in_single = false, in_double = false;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const char c = raw[i];
        if (c == '\'' && !in_double) in_single = !in_single;
        if (c == '"' && !in_single) in_double = !in_double;
        if (c == '#' && !in_single && !in_double && (i == 0 || raw[i - 1] == ' ' || raw[i - 1] == '\t'))
            return raw.substr(0, i);
    }
    return raw;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

nlohmann::json parse_scalar(const std::string& raw) {
    const std::string s = trim(raw);
    if (s.empty() || s == "null" || s == "~") return nullptr;
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                          (s.front() == '\'' && s.back() == '\'')))
        return s.substr(1, s.size() - 2);
    if (s == "true") return true;
    if (s == "false") return false;
    {
        char* end = nullptr;
        const long long v = std::strtoll(s.c_str(), &end, 10);
        if (end && *end == '\0' && end != s.c_str()) return v;
    }
    {
        char* end = nullptr;
        const double v = std::strtod(s.c_str(), &end);
        if (end && *end == '\0' && end != s.c_str()) return v;
    }
    return s;
}

nlohmann::json parse_value(const std::string& raw) {
    const std::string s = trim(raw);
    if (s.size() >= 2 && s.front() == '[' && s.back() == ']') {
        nlohmann::json arr = nlohmann::json::array();
        const std::string body = s.substr(1, s.size() - 2);
        std::string item;
        std::istringstream stream(body);
        while (std::getline(stream, item, ',')) {
            if (trim(item).empty()) continue;
            arr.push_back(parse_scalar(item));
        }
        return arr;
    }
    return parse_scalar(s);
}

nlohmann::json parse_block(const std::vector<Line>& lines, std::size_t& pos, int indent);

nlohmann::json parse_sequence(const std::vector<Line>& lines, std::size_t& pos, int indent) {
    nlohmann::json arr = nlohmann::json::array();
    while (pos < lines.size() && lines[pos].indent == indent && lines[pos].text[0] == '-') {
        std::string rest = trim(lines[pos].text.substr(1));
        ++pos;
        if (rest.empty()) {
            if (pos >= lines.size() || lines[pos].indent <= indent)
                throw std::runtime_error("yaml: empty sequence item");
            arr.push_back(parse_block(lines, pos, lines[pos].indent));
        } else {
            arr.push_back(parse_value(rest));
        }
    }
    return arr;
}

nlohmann::json parse_block(const std::vector<Line>& lines, std::size_t& pos, int indent) {
    if (pos >= lines.size()) return nullptr;
    if (lines[pos].text[0] == '-') return parse_sequence(lines, pos, indent);

    nlohmann::json obj = nlohmann::json::object();
    while (pos < lines.size() && lines[pos].indent == indent) {
        const std::string& text = lines[pos].text;
        if (text[0] == '-') break;
        const std::size_t colon = text.find(':');
        if (colon == std::string::npos)
            throw std::runtime_error("yaml: expected 'key: value', got '" + text + "'");
        const std::string key = trim(text.substr(0, colon));
        const std::string rest = trim(text.substr(colon + 1));
        ++pos;
        if (!rest.empty()) {
            obj[key] = parse_value(rest);
        } else if (pos < lines.size() && lines[pos].indent > indent) {
            obj[key] = parse_block(lines, pos, lines[pos].indent);
        } else {
            obj[key] = nullptr;
        }
    }
    return obj;
}

}  // namespace

nlohmann::json parse_yaml(const std::string& text) {
    std::vector<Line> lines;
    std::istringstream stream(text);
    std::string raw;
    while (std::getline(stream, raw)) {
        const std::string without_comment = strip_comment(raw);
        const std::string content = trim(without_comment);
        if (content.empty() || content == "---" || content == "...") continue;
        int indent = 0;
        while (indent < static_cast<int>(without_comment.size()) && without_comment[indent] == ' ')
            ++indent;
        lines.push_back({indent, content});
    }
    if (lines.empty()) return nlohmann::json::object();
    std::size_t pos = 0;
    nlohmann::json result = parse_block(lines, pos, lines[0].indent);
    if (pos != lines.size())
        throw std::runtime_error("yaml: inconsistent indentation near '" + lines[pos].text + "'");
    return result;
}

nlohmann::json load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_config: cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    if (path.extension() == ".json") return nlohmann::json::parse(text);
    const std::size_t first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && (text[first] == '{' || text[first] == '['))
        return nlohmann::json::parse(text);
    return parse_yaml(text);
}

}  // namespace ctf
