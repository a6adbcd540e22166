#pragma once

// Minimal CSV writing/reading: RFC 4180 quoting, shortest round-trip doubles.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "claimclust/error.hpp"

namespace claimclust::csv {

inline std::string format_double(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

inline std::string quote(std::string_view field) {
    if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

// Reads all data rows (header checked and skipped). Each row must have `columns` fields.
inline std::vector<std::vector<std::string>> read_rows(const std::filesystem::path& path,
                                                       const std::vector<std::string>& header) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line) || split_line(line) != header) {
        throw InputError(path.string() + ": unexpected CSV header");
    }
    std::vector<std::vector<std::string>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto fields = split_line(line);
        if (fields.size() != header.size()) {
            throw InputError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                             std::to_string(header.size()) + " fields, found " + std::to_string(fields.size()));
        }
        rows.push_back(std::move(fields));
    }
    return rows;
}

template <typename T>
T parse_number(const std::string& text, const std::string& where) {
    T value{};
    auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw InputError(where + ": cannot parse number '" + text + "'");
    }
    return value;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    return out;
}

}  // namespace claimclust::csv
