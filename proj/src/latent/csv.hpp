#pragma once

#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace latent {

struct CsvRow {
    std::vector<std::string> fields;
    std::size_t line_no = 0;  // 1-based physical line in the stream
};

/// Line-oriented CSV reader. Supports double-quoted fields with "" escapes;
/// embedded newlines inside quotes are not supported (none of our formats
/// need them).
class CsvReader {
public:
    explicit CsvReader(std::istream& in) : in_(in) {}

    /// Reads the next non-empty line. Returns false at end of stream.
    bool next(CsvRow& row);

private:
    std::istream& in_;
    std::size_t line_no_ = 0;
};

std::vector<std::string> parse_csv_line(std::string_view line, std::size_t line_no);

std::string csv_escape(std::string_view field);
std::string join_csv(const std::vector<std::string>& fields);

}  // namespace latent
