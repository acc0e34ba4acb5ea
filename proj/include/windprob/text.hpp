#pragma once

#include "windprob/error.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace windprob::text {

/// Shortest representation that reads back to the identical double.
inline std::string format_double(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    if (!s.empty() && s.front() == '+') {
        s.remove_prefix(1);
    }
    double out = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    require(res.ec == std::errc{} && res.ptr == s.data() + s.size(), ErrorCode::Parse,
            "not a number: '" + std::string(s) + "'");
    return out;
}

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view line, char sep = ',') {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return out;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorCode::Io, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorCode::Io, "cannot write " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    require(static_cast<bool>(out), ErrorCode::Io, "write failed for " + path);
}

/// Header-indexed CSV table; every row has the header's width.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(std::string_view name) const {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) {
                return i;
            }
        }
        fail(ErrorCode::Parse, "missing CSV column '" + std::string(name) + "'");
    }
};

inline CsvTable parse_csv(std::string_view content) {
    CsvTable table;
    std::istringstream in{std::string(content)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto t = trim(line);
        if (t.empty() || t.front() == '#') {
            continue;
        }
        auto fields = split(t);
        if (table.header.empty()) {
            table.header = std::move(fields);
            continue;
        }
        require(fields.size() == table.header.size(), ErrorCode::Parse,
                "CSV line " + std::to_string(lineno) + " has " + std::to_string(fields.size()) + " fields, expected " +
                    std::to_string(table.header.size()));
        table.rows.push_back(std::move(fields));
    }
    require(!table.header.empty(), ErrorCode::Parse, "CSV has no header");
    return table;
}

} // namespace windprob::text
