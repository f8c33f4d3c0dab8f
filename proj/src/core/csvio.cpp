#include "core/csvio.hpp"

#include "core/domain.hpp"

#include <charconv>
#include <fstream>

namespace mmqkd {

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{})
        throw std::runtime_error("format_double: conversion failed");
    return std::string(buf, ptr);
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
}

} // namespace

int CsvTable::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name)
            return static_cast<int>(i);
    return -1;
}

int CsvTable::require_column(std::string_view name) const {
    const int col = column(name);
    if (col < 0)
        throw ParseError(path + ":1: missing required column '" + std::string(name) + "'");
    return col;
}

const std::string& CsvTable::field(std::size_t row, int col) const {
    return rows.at(row).at(static_cast<std::size_t>(col));
}

double CsvTable::number(std::size_t row, int col) const {
    const std::string& s = field(row, col);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw ParseError(path + ":" + std::to_string(row + 2) + ": not a number: '" + s + "'");
    return v;
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw ParseError(path.string() + ": cannot open");
    CsvTable table;
    table.path = path.string();
    std::string line;
    if (!std::getline(in, line))
        throw ParseError(table.path + ":1: empty file");
    strip_cr(line);
    table.header = split_fields(line);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (line.empty())
            continue;
        auto fields = split_fields(line);
        if (fields.size() != table.header.size())
            throw ParseError(table.path + ":" + std::to_string(line_no) + ": expected " +
                             std::to_string(table.header.size()) + " fields, got " +
                             std::to_string(fields.size()));
        table.rows.push_back(std::move(fields));
    }
    return table;
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path, std::ios::binary); // '\n' endings on every platform
    if (!out)
        throw ConfigError("cannot open for writing: " + path.string());
    auto emit = [&out](const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i)
                out << ',';
            out << fields[i];
        }
        out << '\n';
    };
    emit(header);
    for (const auto& row : rows) {
        if (row.size() != header.size())
            throw ConfigError("csv row width does not match the header: " + path.string());
        emit(row);
    }
    if (!out)
        throw ConfigError("write failed: " + path.string());
}

} // namespace mmqkd
