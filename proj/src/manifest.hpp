#pragma once

// Shared helpers for the text-manifest container family: a strict line
// tokenizer plus number parsing that treats any deviation as an io_error.
// Internal to the library sources; not installed.

#include <cerrno>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <string_view>
#include <vector>

#include "nobl/errors.hpp"

namespace nobl::detail {

inline std::string fmt_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

// Strict line tokenizer for the manifest: every parse failure is an io_error
// naming the offending line.
struct LineParser {
    std::string_view text;
    std::size_t pos = 0;
    std::string label;
    std::size_t line_no = 0;

    bool at_end() const { return pos >= text.size(); }

    std::string_view next_line() {
        if (at_end()) throw io_error(label + ": truncated manifest");
        const std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos)
            throw io_error(label + ": truncated manifest");
        std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        return line;
    }

    [[noreturn]] void fail(std::string_view what) const {
        throw io_error(label + ": manifest line " + std::to_string(line_no) +
                       ": " + std::string(what));
    }
};

inline std::vector<std::string_view> split_tokens(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && line[i] == ' ') ++i;
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ') ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

inline double parse_double(LineParser& p, std::string_view tok) {
    const std::string s(tok);
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(s.c_str(), &end);
    if (errno != 0 || end != s.c_str() + s.size()) p.fail("bad number");
    return v;
}

inline std::uint64_t parse_u64(LineParser& p, std::string_view tok) {
    if (tok.empty() || tok[0] == '-') p.fail("bad count");
    const std::string s(tok);
    char* end = nullptr;
    errno = 0;
    const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
    if (errno != 0 || end != s.c_str() + s.size()) p.fail("bad count");
    return static_cast<std::uint64_t>(v);
}

inline std::vector<std::string_view> expect_row(LineParser& p,
                                                std::string_view key,
                                                std::size_t values) {
    const std::string_view line = p.next_line();
    std::vector<std::string_view> toks = split_tokens(line);
    if (toks.empty() || toks[0] != key)
        p.fail("expected '" + std::string(key) + "'");
    if (toks.size() != values + 1)
        p.fail("wrong field count for '" + std::string(key) + "'");
    toks.erase(toks.begin());
    return toks;
}

} // namespace nobl::detail
