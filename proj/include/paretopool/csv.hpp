#pragma once

#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "paretopool/error.hpp"

namespace paretopool::csv {

/// Streaming RFC-4180 reader: comma separated, double-quote quoting with "" escapes,
/// CRLF or LF line endings, newlines allowed inside quoted fields.
class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    /// Next record, or nullopt at end of input. Throws FormatError on an unterminated quote.
    std::optional<std::vector<std::string>> next() {
        std::vector<std::string> fields;
        std::string field;
        bool quoted = false;
        bool any = false;
        int c;
        while ((c = in_.get()) != EOF) {
            any = true;
            const char ch = static_cast<char>(c);
            if (quoted) {
                if (ch == '"') {
                    if (in_.peek() == '"') {
                        in_.get();
                        field += '"';
                    } else {
                        quoted = false;
                    }
                } else {
                    if (ch == '\n') ++line_;
                    field += ch;
                }
                continue;
            }
            if (ch == '"') {
                quoted = true;
            } else if (ch == ',') {
                fields.push_back(std::move(field));
                field.clear();
            } else if (ch == '\r') {
                if (in_.peek() == '\n') in_.get();
                ++line_;
                fields.push_back(std::move(field));
                return fields;
            } else if (ch == '\n') {
                ++line_;
                fields.push_back(std::move(field));
                return fields;
            } else {
                field += ch;
            }
        }
        if (quoted) throw FormatError("unterminated quoted field near line " + std::to_string(line_ + 1));
        if (!any) return std::nullopt;
        fields.push_back(std::move(field));
        return fields;
    }

    /// Number of physical lines consumed so far.
    std::size_t line() const noexcept { return line_; }

private:
    std::istream& in_;
    std::size_t line_ = 0;
};

inline std::string quote(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

/// Fixed 9-significant-digit formatting used for every emitted table.
inline std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

class Writer {
public:
    explicit Writer(std::ostream& out) : out_(out) {}

    void row(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out_ << ',';
            out_ << quote(fields[i]);
        }
        out_ << '\n';
    }

private:
    std::ostream& out_;
};

}  // namespace paretopool::csv
