#include "eas/csv.hpp"

namespace eas::csv {

std::optional<Record> Reader::next() {
    unterminated_ = false;
    if (first_) {
        first_ = false;
        if (in_.peek() == 0xEF) {
            char bom[3];
            in_.read(bom, 3);
            if (!(static_cast<unsigned char>(bom[1]) == 0xBB &&
                  static_cast<unsigned char>(bom[2]) == 0xBF)) {
                in_.clear();
                in_.seekg(0);
            }
        }
    }
    if (in_.peek() == std::char_traits<char>::eof()) return std::nullopt;

    Record rec;
    rec.line = line_;
    std::string field;
    bool quoted = false;
    bool field_was_quoted = false;
    int c;
    while ((c = in_.get()) != std::char_traits<char>::eof()) {
        const char ch = static_cast<char>(c);
        if (quoted) {
            if (ch == '"') {
                if (in_.peek() == '"') {
                    in_.get();
                    field.push_back('"');
                } else {
                    quoted = false;
                }
            } else {
                if (ch == '\n') ++line_;
                field.push_back(ch);
            }
            continue;
        }
        if (ch == '"' && field.empty() && !field_was_quoted) {
            quoted = true;
            field_was_quoted = true;
        } else if (ch == ',') {
            rec.fields.push_back(std::move(field));
            field.clear();
            field_was_quoted = false;
        } else if (ch == '\r' && in_.peek() == '\n') {
            continue;
        } else if (ch == '\n') {
            ++line_;
            rec.fields.push_back(std::move(field));
            return rec;
        } else {
            field.push_back(ch);
        }
    }
    if (quoted) unterminated_ = true;
    rec.fields.push_back(std::move(field));
    return rec;
}

std::vector<Record> read_all(std::istream& in) {
    Reader reader(in);
    std::vector<Record> out;
    while (auto rec = reader.next()) out.push_back(std::move(*rec));
    return out;
}

std::string escape(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
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

std::string format_row(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out.push_back(',');
        out += escape(fields[i]);
    }
    out.push_back('\n');
    return out;
}

}  // namespace eas::csv
