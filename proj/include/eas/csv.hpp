#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace eas::csv {

struct Record {
    std::size_t line = 0;  ///< 1-based physical line on which the record starts
    std::vector<std::string> fields;
};

/// RFC 4180 reader. Accepts LF or CRLF line endings, quoted fields with
/// embedded separators, quotes ("") and line breaks. A UTF-8 BOM on the first
/// line is skipped.
class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    /// Next record, or nullopt at end of input. A quoted field that runs to
    /// end of input yields a record with `unterminated` set.
    std::optional<Record> next();
    bool last_unterminated() const { return unterminated_; }

private:
    std::istream& in_;
    std::size_t line_ = 1;
    bool first_ = true;
    bool unterminated_ = false;
};

std::vector<Record> read_all(std::istream& in);

/// Quotes a field when it contains a comma, quote, CR or LF.
std::string escape(std::string_view field);

/// Joins escaped fields with commas and terminates with '\n'.
std::string format_row(const std::vector<std::string>& fields);

}  // namespace eas::csv
