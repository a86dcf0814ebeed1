#pragma once

#include <sodium.h>

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <stdexcept>
#include <string>
#include <string_view>

#include "refstab/digest.hpp"

namespace refstab {

/// Milliseconds since the Unix epoch, UTC.
using Instant = std::int64_t;

inline Instant now_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

inline std::string format_iso(Instant ms) {
    std::time_t secs = static_cast<std::time_t>(ms / 1000);
    int millis = static_cast<int>(ms % 1000);
    if (millis < 0) {
        millis += 1000;
        secs -= 1;
    }
    std::tm tm{};
    gmtime_r(&secs, &tm);
    char buf[80];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ",
                  tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour,
                  tm.tm_min, tm.tm_sec, millis);
    return buf;
}

/// Accepts either an integer millisecond timestamp or an ISO-8601 UTC instant
/// ("2026-05-10T12:00:00Z", optionally with .mmm).
inline Instant parse_instant(std::string_view text) {
    if (text.empty()) {
        throw std::invalid_argument("empty instant");
    }
    bool digits_only = true;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (!(c >= '0' && c <= '9') && !(i == 0 && c == '-')) {
            digits_only = false;
            break;
        }
    }
    if (digits_only) {
        return std::stoll(std::string(text));
    }
    std::tm tm{};
    int millis = 0;
    int consumed = 0;
    std::string s(text);
    int n = std::sscanf(s.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%n", &tm.tm_year,
                        &tm.tm_mon, &tm.tm_mday, &tm.tm_hour, &tm.tm_min,
                        &tm.tm_sec, &consumed);
    if (n != 6) {
        throw std::invalid_argument("unparseable instant '" + s + "'");
    }
    std::string rest = s.substr(consumed);
    if (!rest.empty() && rest[0] == '.') {
        std::size_t i = 1;
        int frac = 0, scale = 100;
        while (i < rest.size() && rest[i] >= '0' && rest[i] <= '9') {
            if (scale > 0) frac += (rest[i] - '0') * scale;
            scale /= 10;
            ++i;
        }
        millis = frac;
        rest = rest.substr(i);
    }
    if (!rest.empty() && rest != "Z") {
        throw std::invalid_argument("instant must be UTC ('Z'): '" + s + "'");
    }
    tm.tm_year -= 1900;
    tm.tm_mon -= 1;
    std::time_t secs = timegm(&tm);
    return static_cast<Instant>(secs) * 1000 + millis;
}

/// Random version-4 UUID, textual form.
inline std::string uuid4() {
    ensure_crypto_init();
    unsigned char b[16];
    randombytes_buf(b, sizeof(b));
    b[6] = static_cast<unsigned char>((b[6] & 0x0f) | 0x40);
    b[8] = static_cast<unsigned char>((b[8] & 0x3f) | 0x80);
    char buf[37];
    std::snprintf(buf, sizeof(buf),
                  "%02x%02x%02x%02x-%02x%02x-%02x%02x-%02x%02x-%02x%02x%02x%02x%02x%02x",
                  b[0], b[1], b[2], b[3], b[4], b[5], b[6], b[7], b[8], b[9],
                  b[10], b[11], b[12], b[13], b[14], b[15]);
    return buf;
}

}  // namespace refstab
