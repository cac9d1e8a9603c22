#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace latent {

// Error taxonomy; the CLI maps each class to a stable exit code.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Hashing and seed derivation.

std::uint64_t fnv1a64(std::string_view s);
std::uint64_t splitmix64(std::uint64_t x);

/// Derive a stage seed from the root seed and a label, so every consumer of
/// randomness has its own stream.
std::uint64_t derive_seed(std::uint64_t root, std::string_view label);

// ---------------------------------------------------------------------------
// Deterministic random helpers. mt19937_64 output is fully specified by the
// standard; the distributions below are hand-rolled because the std
// distribution objects are implementation-defined.

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) with 53-bit resolution.
double uniform01(Rng& g);

/// Uniform integer in [0, n). n must be > 0.
std::size_t uniform_below(Rng& g, std::size_t n);

/// Standard normal via Box-Muller (two uniforms per call, no cached spare).
double gaussian(Rng& g);

// ---------------------------------------------------------------------------
// Calendar dates. A Date is a count of days since 1970-01-01 in the cohort's
// fixed local offset; all day arithmetic is purely civil.

struct Date {
    std::int32_t days = 0;
    auto operator<=>(const Date&) const = default;
};

struct CivilDate {
    int year = 1970;
    int month = 1;
    int day = 1;
};

Date make_date(int year, int month, int day);
CivilDate civil_of(Date d);
std::optional<Date> parse_date(std::string_view iso);  // YYYY-MM-DD
std::string to_string(Date d);

/// Add calendar months, clamping the day-of-month (Jan 31 + 1mo = Feb 28/29).
Date add_months(Date d, int months);

/// Local calendar date of a UTC timestamp under a fixed offset in seconds.
Date local_date_of(std::int64_t utc_seconds, int offset_seconds);

/// Parse "+HH:MM" / "-HH:MM" into seconds. Throws ConfigError on bad input.
int parse_tz_offset(std::string_view s);
std::string format_tz_offset(int offset_seconds);

// ---------------------------------------------------------------------------
// Location vocabulary. Rooms are config-supplied; bed-in/bed-out are sleep-mat
// event tokens that rectification expands into `sleep` slot occupancy, and
// `nowhere` marks slots without any event.

struct Vocabulary {
    std::vector<std::string> rooms;

    static constexpr std::string_view kBedIn = "bed-in";
    static constexpr std::string_view kBedOut = "bed-out";
    static constexpr std::string_view kSleep = "sleep";
    static constexpr std::string_view kNowhere = "nowhere";

    static Vocabulary defaults();
    static Vocabulary from_csv_list(std::string_view csv);

    bool is_room(std::string_view token) const;
    /// Tokens accepted in raw event streams: rooms plus bed-in/bed-out.
    bool is_event_token(std::string_view token) const;
    /// Tokens a rectified slot may hold: rooms, sleep, nowhere.
    std::vector<std::string> slot_tokens() const;
    /// Index of a token within slot_tokens(), or -1.
    int slot_index(std::string_view token) const;
};

// ---------------------------------------------------------------------------
// Misc utilities.

/// Format with 17 significant digits so every double round-trips.
std::string fmt_double(double v);

std::string read_file(const std::string& path);

/// Write via temp file + rename so readers never observe partial content.
void write_file_atomic(const std::string& path, std::string_view content);

/// FNV-1a of a file's bytes, as 16 hex digits. Throws ParseError if unreadable.
std::string file_digest(const std::string& path);

std::vector<std::string> split(std::string_view s, char sep);
std::string_view trim(std::string_view s);

/// Thread budget from LATENT_STATES_THREADS (default 1, clamped to [1, 256]).
int thread_count();

}  // namespace latent
