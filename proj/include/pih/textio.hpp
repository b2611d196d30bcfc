#pragma once

// Text encoding helpers shared by the dataset, model, trace and report
// writers. Doubles are printed with std::to_chars shortest form, which
// round-trips exactly and is locale independent.

#include <charconv>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>

namespace pih {

inline void append_double(std::string& out, double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

inline std::string format_double(double v) {
    std::string s;
    append_double(s, v);
    return s;
}

// Cursor over whitespace-separated tokens on one line. Keeps the running
// byte offset so parse errors can name the exact position in the file.
class TokenCursor {
public:
    TokenCursor(std::string_view line, std::size_t line_no, std::size_t line_byte_offset)
        : line_(line), line_no_(line_no), base_offset_(line_byte_offset) {}

    bool done() {
        skip_ws();
        return pos_ >= line_.size();
    }

    std::string_view token(const char* what) {
        skip_ws();
        if (pos_ >= line_.size()) fail(what, "unexpected end of line");
        const std::size_t start = pos_;
        while (pos_ < line_.size() && line_[pos_] != ' ' && line_[pos_] != '\t') ++pos_;
        return line_.substr(start, pos_ - start);
    }

    double number(const char* what) {
        skip_ws();
        const std::size_t start = pos_;
        const std::string_view tok = token(what);
        double v = 0.0;
        const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size()) {
            pos_ = start;
            fail(what, "not a number: '" + std::string(tok) + "'");
        }
        return v;
    }

    long integer(const char* what) {
        skip_ws();
        const std::size_t start = pos_;
        const std::string_view tok = token(what);
        long v = 0;
        const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size()) {
            pos_ = start;
            fail(what, "not an integer: '" + std::string(tok) + "'");
        }
        return v;
    }

    void expect(std::string_view literal, const char* what) {
        if (token(what) != literal) {
            fail(what, "expected '" + std::string(literal) + "'");
        }
    }

    [[noreturn]] void fail(const char* what, const std::string& detail) const {
        throw std::runtime_error("parse error at line " + std::to_string(line_no_) +
                                 ", byte " + std::to_string(base_offset_ + pos_) +
                                 " (" + what + "): " + detail);
    }

private:
    void skip_ws() {
        while (pos_ < line_.size() && (line_[pos_] == ' ' || line_[pos_] == '\t')) ++pos_;
    }

    std::string_view line_;
    std::size_t pos_ = 0;
    std::size_t line_no_;
    std::size_t base_offset_;
};

}  // namespace pih
