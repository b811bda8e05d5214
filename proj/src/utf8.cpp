#include "glyphid/utf8.hpp"

#include "glyphid/errors.hpp"

#include <cstdio>

namespace glyphid::utf8 {

char32_t decode_one(std::string_view text, size_t& pos) {
    if (pos >= text.size()) fail(Errc::ParseError, "utf-8 decode past end of input");
    auto byte = [&](size_t i) { return static_cast<unsigned char>(text[i]); };
    unsigned char b0 = byte(pos);
    int extra = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
        cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
        cp = b0 & 0x1F;
        extra = 1;
    } else if ((b0 & 0xF0) == 0xE0) {
        cp = b0 & 0x0F;
        extra = 2;
    } else if ((b0 & 0xF8) == 0xF0) {
        cp = b0 & 0x07;
        extra = 3;
    } else {
        fail(Errc::ParseError, "invalid utf-8 lead byte at offset " + std::to_string(pos));
    }
    if (pos + extra >= text.size())
        fail(Errc::ParseError, "truncated utf-8 sequence at offset " + std::to_string(pos));
    for (int i = 1; i <= extra; ++i) {
        unsigned char b = byte(pos + i);
        if ((b & 0xC0) != 0x80)
            fail(Errc::ParseError, "invalid utf-8 continuation byte at offset " + std::to_string(pos + i));
        cp = (cp << 6) | (b & 0x3F);
    }
    // reject overlong forms and surrogates
    static const char32_t min_for_len[4] = {0, 0x80, 0x800, 0x10000};
    if (cp < min_for_len[extra] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF))
        fail(Errc::ParseError, "invalid utf-8 codepoint at offset " + std::to_string(pos));
    pos += static_cast<size_t>(extra) + 1;
    return cp;
}

std::vector<char32_t> decode(std::string_view text) {
    std::vector<char32_t> out;
    out.reserve(text.size());
    size_t pos = 0;
    while (pos < text.size()) out.push_back(decode_one(text, pos));
    return out;
}

std::string encode(char32_t cp) {
    std::string out;
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
    return out;
}

char32_t parse_codepoint_ref(std::string_view text) {
    if (text.size() < 6 || text.size() > 8 || text[0] != 'U' || text[1] != '+')
        fail(Errc::ParseError, "expected U+XXXX codepoint reference, got '" + std::string(text) + "'");
    char32_t cp = 0;
    for (size_t i = 2; i < text.size(); ++i) {
        char c = text[i];
        int digit;
        if (c >= '0' && c <= '9') digit = c - '0';
        else if (c >= 'A' && c <= 'F') digit = c - 'A' + 10;
        else if (c >= 'a' && c <= 'f') digit = c - 'a' + 10;
        else fail(Errc::ParseError, "bad hex digit in codepoint reference '" + std::string(text) + "'");
        cp = (cp << 4) | static_cast<char32_t>(digit);
    }
    if (cp > 0x10FFFF)
        fail(Errc::ParseError, "codepoint out of range: '" + std::string(text) + "'");
    return cp;
}

std::string codepoint_ref(char32_t cp) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "U+%04X", static_cast<unsigned>(cp));
    return buf;
}

size_t length(std::string_view text) {
    size_t pos = 0, n = 0;
    while (pos < text.size()) {
        decode_one(text, pos);
        ++n;
    }
    return n;
}

} // namespace glyphid::utf8
