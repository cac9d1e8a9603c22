#include "latent/preprocess.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

namespace latent {

using nlohmann::json;

namespace {

struct SleepSpan {
    std::int64_t begin = 0;  // local second-of-day, inclusive
    std::int64_t end = 0;    // exclusive
};

// Expand bed-in -> bed-out pairs into in-bed spans within [0, 86400).
// A bed-out without a prior bed-in opens the span at the start of the day;
// a bed-in without a following bed-out runs to the end of the day.
std::vector<SleepSpan> sleep_spans(const std::vector<SensorEvent>& events,
                                   std::int64_t day_start_local) {
    std::vector<SleepSpan> spans;
    bool in_bed = false;
    std::int64_t begin = 0;
    for (const auto& e : events) {
        std::int64_t sec = e.timestamp - day_start_local;
        if (e.location == Vocabulary::kBedIn) {
            if (!in_bed) {
                in_bed = true;
                begin = sec;
            }
        } else if (e.location == Vocabulary::kBedOut) {
            if (in_bed) {
                if (sec > begin) spans.push_back({begin, sec});
                in_bed = false;
            } else {
                if (sec > 0) spans.push_back({0, sec});
            }
        }
    }
    if (in_bed && begin < 86400) spans.push_back({begin, 86400});
    return spans;
}

}  // namespace

DailyActivitySequence rectify_day(const DayEvents& day, const Vocabulary& vocab,
                                  int window_minutes, int tz_offset_seconds) {
    if (window_minutes <= 0 || 1440 % window_minutes != 0) {
        throw ConfigError("window minutes must divide 1440, got " +
                          std::to_string(window_minutes));
    }
    const int n_slots = slots_per_day(window_minutes);
    const std::int64_t win = static_cast<std::int64_t>(window_minutes) * 60;
    // Local second-of-day 0 for this calendar date.
    const std::int64_t day_start_local =
        static_cast<std::int64_t>(day.date.days) * 86400 - tz_offset_seconds;

    auto spans = sleep_spans(day.events, day_start_local);

    DailyActivitySequence seq;
    seq.participant_id = day.participant_id;
    seq.date = day.date;
    seq.slots.reserve(static_cast<std::size_t>(n_slots));

    std::size_t cursor = 0;  // events are sorted by timestamp
    for (int t = 0; t < n_slots; ++t) {
        const std::int64_t w0 = t * win;
        const std::int64_t w1 = w0 + win;

        // counts and first-occurrence seconds per candidate slot token
        std::map<std::string, std::pair<std::int64_t, std::int64_t>> tally;  // token -> {count, first}
        while (cursor < day.events.size()) {
            const auto& e = day.events[cursor];
            std::int64_t sec = e.timestamp - day_start_local;
            if (sec >= w1) break;
            if (sec >= w0 && vocab.is_room(e.location)) {
                auto [it, fresh] = tally.try_emplace(e.location, 0, sec);
                it->second.first += 1;
                if (!fresh) it->second.second = std::min(it->second.second, sec);
            }
            ++cursor;
        }
        // sleep competes at one synthetic event per in-bed second in the window
        std::int64_t sleep_seconds = 0;
        std::int64_t sleep_first = std::numeric_limits<std::int64_t>::max();
        for (const auto& s : spans) {
            std::int64_t lo = std::max(s.begin, w0);
            std::int64_t hi = std::min(s.end, w1);
            if (hi > lo) {
                sleep_seconds += hi - lo;
                sleep_first = std::min(sleep_first, lo);
            }
        }
        if (sleep_seconds > 0) {
            tally[std::string(Vocabulary::kSleep)] = {sleep_seconds, sleep_first};
        }

        if (tally.empty()) {
            seq.slots.emplace_back(Vocabulary::kNowhere);
            continue;
        }
        // highest count, then earliest first occurrence, then token order
        const std::string* best = nullptr;
        std::int64_t best_count = -1, best_first = 0;
        for (const auto& [token, cf] : tally) {
            auto [count, first] = cf;
            bool wins = count > best_count ||
                        (count == best_count && first < best_first) ||
                        (count == best_count && first == best_first && best && token < *best);
            if (wins) {
                best = &token;
                best_count = count;
                best_first = first;
            }
        }
        seq.slots.push_back(*best);
    }
    return seq;
}

std::string render_text(const DailyActivitySequence& seq) {
    std::string out;
    for (std::size_t i = 0; i < seq.slots.size(); ++i) {
        if (i) out += ' ';
        out += seq.slots[i];
    }
    return out;
}

DailyActivitySequence parse_text(const std::string& participant_id, Date date,
                                 const std::string& text, const Vocabulary& vocab,
                                 int expected_slots) {
    DailyActivitySequence seq;
    seq.participant_id = participant_id;
    seq.date = date;
    std::istringstream ss(text);
    std::string tok;
    while (ss >> tok) {
        if (vocab.slot_index(tok) < 0) {
            throw ParseError("unknown slot token '" + tok + "'");
        }
        seq.slots.push_back(tok);
    }
    if (static_cast<int>(seq.slots.size()) != expected_slots) {
        throw ParseError("expected " + std::to_string(expected_slots) + " tokens, got " +
                         std::to_string(seq.slots.size()));
    }
    return seq;
}

OneHotDay one_hot_encode(const DailyActivitySequence& seq, const Vocabulary& vocab) {
    const auto tokens = vocab.slot_tokens();
    const std::size_t m = tokens.size();
    OneHotDay day;
    day.participant_id = seq.participant_id;
    day.date = seq.date;
    day.vec.assign(seq.slots.size() * m, 0);
    for (std::size_t t = 0; t < seq.slots.size(); ++t) {
        int idx = vocab.slot_index(seq.slots[t]);
        if (idx < 0) throw DomainError("token outside vocabulary: " + seq.slots[t]);
        day.vec[t * m + static_cast<std::size_t>(idx)] = 1;
    }
    return day;
}

void write_days(const std::vector<DailyActivitySequence>& days, const std::string& path) {
    std::string body;
    for (const auto& d : days) {
        json j;
        j["participant_id"] = d.participant_id;
        j["date"] = to_string(d.date);
        j["slots"] = d.slots;
        body += j.dump();
        body += '\n';
    }
    write_file_atomic(path, body);
}

std::vector<DailyActivitySequence> read_days(const std::string& path, const Vocabulary& vocab) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::vector<DailyActivitySequence> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            throw ParseError("line " + std::to_string(line_no) + ": invalid JSON in " + path);
        }
        DailyActivitySequence d;
        d.participant_id = j.at("participant_id").get<std::string>();
        auto date = parse_date(j.at("date").get<std::string>());
        if (!date) throw ParseError("line " + std::to_string(line_no) + ": invalid date");
        d.date = *date;
        for (const auto& s : j.at("slots")) {
            std::string tok = s.get<std::string>();
            if (vocab.slot_index(tok) < 0) {
                throw ParseError("line " + std::to_string(line_no) + ": unknown slot token '" +
                                 tok + "'");
            }
            d.slots.push_back(std::move(tok));
        }
        out.push_back(std::move(d));
    }
    return out;
}

}  // namespace latent
