#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "latent/core.hpp"
#include "latent/ingest.hpp"

namespace latent {

/// Fixed-width slot sequence for one participant-day. With the default
/// 20-minute window a day has 72 slots.
struct DailyActivitySequence {
    std::string participant_id;
    Date date;
    std::vector<std::string> slots;
};

struct OneHotDay {
    std::string participant_id;
    Date date;
    std::vector<std::uint8_t> vec;  // slots x |slot vocabulary|, one 1 per block
};

inline int slots_per_day(int window_minutes) { return 1440 / window_minutes; }

/// Rectify one day's events into fixed windows: each slot holds the most
/// frequent location in [t*w, (t+1)*w) local time, ties broken by earliest
/// first occurrence then token order; empty slots are `nowhere`. bed-in /
/// bed-out events are expanded into `sleep` occupancy that competes at one
/// synthetic event per in-bed second.
DailyActivitySequence rectify_day(const DayEvents& day, const Vocabulary& vocab,
                                  int window_minutes, int tz_offset_seconds);

std::string render_text(const DailyActivitySequence& seq);

DailyActivitySequence parse_text(const std::string& participant_id, Date date,
                                 const std::string& text, const Vocabulary& vocab,
                                 int expected_slots);

OneHotDay one_hot_encode(const DailyActivitySequence& seq, const Vocabulary& vocab);

// JSONL persistence: one {participant_id, date, slots} object per line.
void write_days(const std::vector<DailyActivitySequence>& days, const std::string& path);
std::vector<DailyActivitySequence> read_days(const std::string& path, const Vocabulary& vocab);

}  // namespace latent
