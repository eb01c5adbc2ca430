#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "stressnet/errors.hpp"

namespace stressnet {

/// Shortest decimal representation that round-trips to the same double.
/// Keeps emitted files both readable and byte-stable across runs.
inline std::string format_double(double v) {
    char buf[40];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v)
            break;
    }
    return buf;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows; // row i corresponds to file line i+2
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"' && field.empty()) {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else {
            field += c;
        }
    }
    if (quoted)
        throw ParseError("line " + std::to_string(line_no) + ": unterminated quote");
    fields.push_back(std::move(field));
    return fields;
}

} // namespace detail

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open file: " + path);
    CsvTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        auto fields = detail::split_csv_line(line, line_no);
        if (line_no == 1) {
            table.header = std::move(fields);
        } else {
            if (fields.size() != table.header.size())
                throw ParseError("line " + std::to_string(line_no) + ": expected " +
                                 std::to_string(table.header.size()) + " fields, got " +
                                 std::to_string(fields.size()));
            table.rows.push_back(std::move(fields));
        }
    }
    if (table.header.empty())
        throw ParseError("empty file: " + path);
    return table;
}

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += '"';
        out += c;
    }
    out += '"';
    return out;
}

/// Column index lookup with a parse error naming the missing column.
inline std::size_t csv_column(const CsvTable& table, const std::string& name) {
    for (std::size_t i = 0; i < table.header.size(); ++i)
        if (table.header[i] == name)
            return i;
    throw ParseError("missing required column '" + name + "'");
}

/// Parses a numeric cell; empty cells mean "missing" and map to nullopt.
inline std::optional<double> parse_cell(const std::string& cell, std::size_t line_no,
                                        const std::string& column) {
    if (cell.empty())
        return std::nullopt;
    char* end = nullptr;
    double v = std::strtod(cell.c_str(), &end);
    if (end == cell.c_str() || *end != '\0')
        throw ParseError("line " + std::to_string(line_no) + ": cannot parse '" + cell +
                         "' in column " + column);
    return v;
}

} // namespace stressnet
