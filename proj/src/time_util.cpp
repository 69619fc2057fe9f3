#include "eas/time_util.hpp"

#include "eas/error.hpp"

#include <cctype>
#include <cstdio>
#include <ctime>

namespace eas {

Timestamp system_now() {
    return std::chrono::time_point_cast<Millis>(std::chrono::system_clock::now());
}

Clock system_clock() { return &system_now; }

std::string format_rfc3339(Timestamp t) {
    using namespace std::chrono;
    const auto day = floor<days>(t);
    const year_month_day ymd{day};
    const hh_mm_ss hms{t - day};
    char buf[40];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ",
                  static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()), static_cast<int>(hms.hours().count()),
                  static_cast<int>(hms.minutes().count()),
                  static_cast<int>(hms.seconds().count()),
                  static_cast<int>(hms.subseconds().count()));
    return buf;
}

namespace {

[[noreturn]] void bad_time(std::string_view text) {
    throw Error(ErrorCode::BadRequest, "invalid RFC 3339 timestamp: " + std::string(text));
}

int digits(std::string_view s, std::size_t pos, std::size_t n, std::string_view whole) {
    if (pos + n > s.size()) bad_time(whole);
    int v = 0;
    for (std::size_t i = pos; i < pos + n; ++i) {
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) bad_time(whole);
        v = v * 10 + (s[i] - '0');
    }
    return v;
}

}  // namespace

Timestamp parse_rfc3339(std::string_view text) {
    using namespace std::chrono;
    const std::string_view s = text;
    // YYYY-MM-DDTHH:MM:SS
    if (s.size() < 20 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != 't') ||
        s[13] != ':' || s[16] != ':')
        bad_time(text);
    const int y = digits(s, 0, 4, text);
    const int mo = digits(s, 5, 2, text);
    const int d = digits(s, 8, 2, text);
    const int h = digits(s, 11, 2, text);
    const int mi = digits(s, 14, 2, text);
    const int sec = digits(s, 17, 2, text);
    std::size_t pos = 19;
    long long ms = 0;
    if (pos < s.size() && s[pos] == '.') {
        ++pos;
        int n = 0;
        long long frac = 0;
        while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
            if (n < 3) frac = frac * 10 + (s[pos] - '0');
            ++n;
            ++pos;
        }
        if (n == 0 || n > 9) bad_time(text);
        for (int i = n; i < 3; ++i) frac *= 10;
        ms = frac;
    }
    long long offset_minutes = 0;
    if (pos < s.size() && (s[pos] == 'Z' || s[pos] == 'z')) {
        ++pos;
    } else if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) {
        const int sign = s[pos] == '-' ? -1 : 1;
        if (pos + 6 != s.size() || s[pos + 3] != ':') bad_time(text);
        offset_minutes = sign * (digits(s, pos + 1, 2, text) * 60 + digits(s, pos + 4, 2, text));
        pos += 6;
    } else {
        bad_time(text);
    }
    if (pos != s.size()) bad_time(text);

    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || sec > 59) bad_time(text);
    const auto tp = sys_days{ymd} + hours{h} + minutes{mi} + seconds{sec} + Millis{ms} -
                    minutes{offset_minutes};
    return time_point_cast<Millis>(tp);
}

}  // namespace eas
