#include "latent/core.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace latent {

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t root, std::string_view label) {
    return splitmix64(root ^ fnv1a64(label));
}

double uniform01(Rng& g) {
    return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

std::size_t uniform_below(Rng& g, std::size_t n) {
    if (n == 0) throw DomainError("uniform_below: n must be positive");
    // Lemire's multiply-shift with rejection; unbiased and reproducible.
    __uint128_t m = static_cast<__uint128_t>(g()) * n;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
        std::uint64_t t = (0 - static_cast<std::uint64_t>(n)) % n;
        while (lo < t) {
            m = static_cast<__uint128_t>(g()) * n;
            lo = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::size_t>(m >> 64);
}

double gaussian(Rng& g) {
    // u1 in (0, 1] keeps the log finite.
    double u1 = (static_cast<double>(g() >> 11) + 1.0) * 0x1.0p-53;
    double u2 = uniform01(g);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

// ---------------------------------------------------------------------------

namespace {

namespace chr = std::chrono;

chr::year_month_day ymd_of(Date d) {
    return chr::year_month_day{chr::sys_days{chr::days{d.days}}};
}

}  // namespace

Date make_date(int year, int month, int day) {
    chr::year_month_day ymd{chr::year{year}, chr::month{static_cast<unsigned>(month)},
                            chr::day{static_cast<unsigned>(day)}};
    if (!ymd.ok()) {
        throw DomainError("invalid calendar date " + std::to_string(year) + "-" +
                          std::to_string(month) + "-" + std::to_string(day));
    }
    return Date{static_cast<std::int32_t>(chr::sys_days{ymd}.time_since_epoch().count())};
}

CivilDate civil_of(Date d) {
    auto ymd = ymd_of(d);
    return CivilDate{int(ymd.year()), int(unsigned(ymd.month())), int(unsigned(ymd.day()))};
}

std::optional<Date> parse_date(std::string_view iso) {
    if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') return std::nullopt;
    int y = 0, m = 0, d = 0;
    auto num = [](std::string_view s, int& out) {
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
        return ec == std::errc{} && p == s.data() + s.size();
    };
    if (!num(iso.substr(0, 4), y) || !num(iso.substr(5, 2), m) || !num(iso.substr(8, 2), d)) {
        return std::nullopt;
    }
    chr::year_month_day ymd{chr::year{y}, chr::month{unsigned(m)}, chr::day{unsigned(d)}};
    if (!ymd.ok()) return std::nullopt;
    return Date{static_cast<std::int32_t>(chr::sys_days{ymd}.time_since_epoch().count())};
}

std::string to_string(Date d) {
    auto c = civil_of(d);
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", c.year, c.month, c.day);
    return buf;
}

Date add_months(Date d, int months) {
    auto ymd = ymd_of(d);
    ymd += chr::months{months};
    if (!ymd.ok()) ymd = ymd.year() / ymd.month() / chr::last;
    return Date{static_cast<std::int32_t>(chr::sys_days{ymd}.time_since_epoch().count())};
}

Date local_date_of(std::int64_t utc_seconds, int offset_seconds) {
    std::int64_t local = utc_seconds + offset_seconds;
    std::int64_t day = local >= 0 ? local / 86400 : (local - 86399) / 86400;
    return Date{static_cast<std::int32_t>(day)};
}

int parse_tz_offset(std::string_view s) {
    if (s.size() != 6 || (s[0] != '+' && s[0] != '-') || s[3] != ':') {
        throw ConfigError("tz offset must look like +HH:MM, got '" + std::string(s) + "'");
    }
    int hh = 0, mm = 0;
    auto num = [](std::string_view v, int& out) {
        auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        return ec == std::errc{} && p == v.data() + v.size();
    };
    if (!num(s.substr(1, 2), hh) || !num(s.substr(4, 2), mm) || hh > 14 || mm > 59) {
        throw ConfigError("tz offset must look like +HH:MM, got '" + std::string(s) + "'");
    }
    int sec = hh * 3600 + mm * 60;
    return s[0] == '-' ? -sec : sec;
}

std::string format_tz_offset(int offset_seconds) {
    char sign = offset_seconds < 0 ? '-' : '+';
    int a = std::abs(offset_seconds);
    char buf[16];
    std::snprintf(buf, sizeof buf, "%c%02d:%02d", sign, a / 3600, (a % 3600) / 60);
    return buf;
}

// ---------------------------------------------------------------------------

Vocabulary Vocabulary::defaults() {
    return Vocabulary{{"lounge", "kitchen", "hallway", "bedroom", "bathroom"}};
}

Vocabulary Vocabulary::from_csv_list(std::string_view csv) {
    Vocabulary v;
    for (auto& tok : split(csv, ',')) {
        std::string t{trim(tok)};
        if (t.empty()) continue;
        if (t == kSleep || t == kNowhere || t == kBedIn || t == kBedOut) {
            throw ConfigError("vocabulary token '" + t + "' is reserved");
        }
        if (std::find(v.rooms.begin(), v.rooms.end(), t) != v.rooms.end()) {
            throw ConfigError("duplicate vocabulary token '" + t + "'");
        }
        v.rooms.push_back(std::move(t));
    }
    if (v.rooms.empty()) throw ConfigError("vocabulary must list at least one room");
    return v;
}

bool Vocabulary::is_room(std::string_view token) const {
    return std::find(rooms.begin(), rooms.end(), token) != rooms.end();
}

bool Vocabulary::is_event_token(std::string_view token) const {
    return is_room(token) || token == kBedIn || token == kBedOut;
}

std::vector<std::string> Vocabulary::slot_tokens() const {
    std::vector<std::string> out = rooms;
    out.emplace_back(kSleep);
    out.emplace_back(kNowhere);
    return out;
}

int Vocabulary::slot_index(std::string_view token) const {
    for (std::size_t i = 0; i < rooms.size(); ++i) {
        if (rooms[i] == token) return static_cast<int>(i);
    }
    if (token == kSleep) return static_cast<int>(rooms.size());
    if (token == kNowhere) return static_cast<int>(rooms.size() + 1);
    return -1;
}

// ---------------------------------------------------------------------------

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::string& path, std::string_view content) {
    std::filesystem::path target{path};
    auto tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ParseError("cannot write file: " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw ParseError("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, target);
}

std::string file_digest(const std::string& path) {
    auto bytes = read_file(path);
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(bytes)));
    return buf;
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(s.substr(start));
            break;
        }
        out.emplace_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

int thread_count() {
    const char* env = std::getenv("LATENT_STATES_THREADS");
    if (!env) return 1;
    int n = std::atoi(env);
    return std::clamp(n, 1, 256);
}

}  // namespace latent
