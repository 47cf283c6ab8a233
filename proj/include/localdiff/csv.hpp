#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace localdiff::csv {

/// Splits one physical CSV record into fields. Handles double-quoted fields
/// with embedded commas and doubled quotes; does not handle embedded newlines
/// (the input formats here never quote newlines). Fields are appended to
/// `out`, which is cleared first.
void split_record(std::string_view line, std::vector<std::string>& out);

/// Reads a whole CSV file into memory. Strips a UTF-8 BOM and trailing `\r`
/// per line, skips fully empty lines. First record is the header.
/// Throws input_error if the file cannot be opened or has no header.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    /// 1-based physical line number of each row in the source file.
    std::vector<std::size_t> line_numbers;

    /// Index of a header column, or -1 if absent. Exact match.
    int column(std::string_view name) const;
};

Table read_file(const std::string& path);

/// Quotes a field if it contains a comma, quote, or newline.
std::string escape(std::string_view field);

void write_record(std::ostream& os, const std::vector<std::string>& fields);

} // namespace localdiff::csv
