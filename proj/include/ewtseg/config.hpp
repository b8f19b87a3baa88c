#pragma once

#include <cctype>
#include <map>
#include <sstream>
#include <string>

#include "ewtseg/common.hpp"

namespace ewtseg {

/// Flat `key = value` text; `#` starts a comment. Later keys override earlier ones.
inline std::map<std::string, std::string> parse_config(const std::string& text, const std::string& name = "config") {
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return std::string();
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    };
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw InputError(name + ":" + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw InputError(name + ":" + std::to_string(lineno) + ": empty key");
        for (char c : key)
            if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'))
                throw InputError(name + ":" + std::to_string(lineno) + ": invalid key '" + key + "'");
        out[key] = trim(line.substr(eq + 1));
    }
    return out;
}

}  // namespace ewtseg
