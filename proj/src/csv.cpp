#include "depsev/csv.hpp"

#include <stdexcept>

#include "depsev/util.hpp"

namespace depsev {

std::vector<CsvRecord> parse_csv(const std::string& content, char delimiter) {
    std::vector<CsvRecord> records;
    CsvRecord rec;
    std::string field;
    std::size_t line = 1;
    rec.line = 1;
    bool in_quotes = false;
    bool field_was_quoted = false;
    bool record_has_data = false;

    auto end_field = [&]() {
        rec.fields.push_back(field);
        field.clear();
        field_was_quoted = false;
    };
    auto end_record = [&]() {
        end_field();
        records.push_back(std::move(rec));
        rec = CsvRecord{};
        rec.line = line;
        record_has_data = false;
    };

    for (std::size_t i = 0; i < content.size(); ++i) {
        char c = content[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < content.size() && content[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        if (c == '"') {
            if (!field.empty() || field_was_quoted) {
                throw std::runtime_error("csv: line " + std::to_string(line) +
                                         ": unexpected quote inside unquoted field");
            }
            in_quotes = true;
            field_was_quoted = true;
            record_has_data = true;
        } else if (c == delimiter) {
            end_field();
            record_has_data = true;
        } else if (c == '\r') {
            // swallowed; the following '\n' (if any) terminates the record
        } else if (c == '\n') {
            ++line;
            if (record_has_data || !field.empty() || !rec.fields.empty()) {
                end_record();
            } else {
                rec.line = line;  // skip blank line
            }
        } else {
            field.push_back(c);
            record_has_data = true;
        }
    }
    if (in_quotes) {
        throw std::runtime_error("csv: line " + std::to_string(rec.line) +
                                 ": unterminated quoted field");
    }
    if (record_has_data || !field.empty() || !rec.fields.empty()) {
        end_record();
    }
    return records;
}

std::vector<CsvRecord> parse_csv_file(const std::filesystem::path& path, char delimiter) {
    return parse_csv(read_file(path), delimiter);
}

std::string format_csv_field(const std::string& field, char delimiter) {
    bool needs_quotes = false;
    for (char c : field) {
        if (c == delimiter || c == '"' || c == '\n' || c == '\r') {
            needs_quotes = true;
            break;
        }
    }
    if (!needs_quotes) return field;
    std::string out;
    out.reserve(field.size() + 2);
    out.push_back('"');
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string format_csv_row(const std::vector<std::string>& fields, char delimiter) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i > 0) out.push_back(delimiter);
        out += format_csv_field(fields[i], delimiter);
    }
    out.push_back('\n');
    return out;
}

}  // namespace depsev
