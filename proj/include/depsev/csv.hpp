#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace depsev {

/// One CSV record plus the physical line it starts on (1-based).
struct CsvRecord {
    std::vector<std::string> fields;
    std::size_t line = 0;
};

/// RFC-4180 style parser: quoted fields, doubled quotes, embedded
/// delimiters and newlines. Accepts LF and CRLF line endings.
/// Throws std::runtime_error naming the line on malformed input.
std::vector<CsvRecord> parse_csv(const std::string& content, char delimiter = ',');

std::vector<CsvRecord> parse_csv_file(const std::filesystem::path& path, char delimiter = ',');

/// Quotes a field only when it contains the delimiter, a quote or a newline,
/// so that parse_csv(format) round-trips field values byte-exactly.
std::string format_csv_field(const std::string& field, char delimiter = ',');

std::string format_csv_row(const std::vector<std::string>& fields, char delimiter = ',');

}  // namespace depsev
