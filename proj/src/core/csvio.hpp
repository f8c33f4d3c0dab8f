#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace mmqkd {

// Shortest decimal string that parses back to the identical double.  Using it
// for every numeric field is what makes emitted tables round-trip byte-exactly
// through a read/re-emit cycle.
std::string format_double(double v);

struct CsvTable {
    std::string path; // retained for error messages
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(std::string_view name) const;         // -1 when absent
    int require_column(std::string_view name) const; // ParseError when absent
    const std::string& field(std::size_t row, int col) const;
    double number(std::size_t row, int col) const;   // ParseError with file:line
};

// Plain comma-separated values: one header line, no quoting, uniform field
// count per row; blank lines are skipped, CRLF tolerated.
CsvTable read_csv(const std::filesystem::path& path);

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

} // namespace mmqkd
