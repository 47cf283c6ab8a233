#include "localdiff/csv.hpp"

#include "localdiff/errors.hpp"

#include <fstream>
#include <ostream>

namespace localdiff::csv {

void split_record(std::string_view line, std::vector<std::string>& out) {
    out.clear();
    std::string field;
    std::size_t i = 0;
    const std::size_t n = line.size();
    while (true) {
        field.clear();
        if (i < n && line[i] == '"') {
            ++i;
            while (i < n) {
                if (line[i] == '"') {
                    if (i + 1 < n && line[i + 1] == '"') {
                        field += '"';
                        i += 2;
                    } else {
                        ++i;
                        break;
                    }
                } else {
                    field += line[i++];
                }
            }
            // Anything between the closing quote and the next comma is kept
            // verbatim; real inputs don't produce it but we must not lose data.
            while (i < n && line[i] != ',') field += line[i++];
        } else {
            while (i < n && line[i] != ',') field += line[i++];
        }
        out.push_back(std::move(field));
        if (i >= n) break;
        ++i; // skip comma
        if (i == n) { out.emplace_back(); break; }
    }
}

int Table::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    return -1;
}

Table read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw input_error("cannot open file: " + path);

    Table t;
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (lineno == 1 && line.size() >= 3 &&
            static_cast<unsigned char>(line[0]) == 0xEF &&
            static_cast<unsigned char>(line[1]) == 0xBB &&
            static_cast<unsigned char>(line[2]) == 0xBF)
            line.erase(0, 3);
        if (line.empty()) continue;
        if (!have_header) {
            split_record(line, t.header);
            have_header = true;
        } else {
            t.rows.emplace_back();
            split_record(line, t.rows.back());
            t.line_numbers.push_back(lineno);
        }
    }
    if (!have_header) throw input_error("empty file (no header): " + path);
    return t;
}

std::string escape(std::string_view field) {
    bool needs_quote = false;
    for (char c : field)
        if (c == ',' || c == '"' || c == '\n' || c == '\r') { needs_quote = true; break; }
    if (!needs_quote) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

void write_record(std::ostream& os, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) os << ',';
        os << escape(fields[i]);
    }
    os << '\n';
}

} // namespace localdiff::csv
