#include "latent/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "latent/csv.hpp"

namespace latent {

using nlohmann::json;

namespace {

bool parse_int64(std::string_view s, std::int64_t& out) {
    s = trim(s);
    if (s.empty()) return false;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && p == s.data() + s.size();
}

bool parse_double(std::string_view s, double& out) {
    s = trim(s);
    if (s.empty()) return false;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && p == s.data() + s.size();
}

[[noreturn]] void bad_row(std::size_t line, const std::string& why) {
    throw ParseError("line " + std::to_string(line) + ": " + why);
}

SensorEvent event_from_fields(const std::string& pid, std::string_view ts_text,
                              const std::string& location, const Vocabulary& vocab,
                              std::size_t line) {
    if (pid.empty()) bad_row(line, "missing participant_id");
    std::int64_t ts = 0;
    if (!parse_int64(ts_text, ts) || ts < 0) {
        bad_row(line, "malformed timestamp '" + std::string(ts_text) + "'");
    }
    if (location.empty()) bad_row(line, "missing location");
    if (!vocab.is_event_token(location)) {
        bad_row(line, "unknown location token '" + location + "'");
    }
    return SensorEvent{pid, ts, location};
}

}  // namespace

std::vector<SensorEvent> parse_events(std::istream& in, EventFormat format,
                                      const Vocabulary& vocab, bool lenient,
                                      ParseStats* stats) {
    std::vector<SensorEvent> out;
    ParseStats local;
    auto record_skip = [&](const ParseError& e) {
        if (!lenient) throw e;
        ++local.skipped;
    };

    if (format == EventFormat::csv) {
        CsvReader reader(in);
        CsvRow row;
        if (!reader.next(row)) {
            if (stats) *stats = local;
            return out;  // empty stream -> empty list
        }
        if (row.fields != std::vector<std::string>{"participant_id", "timestamp", "location"}) {
            throw ParseError("line " + std::to_string(row.line_no) +
                             ": expected header participant_id,timestamp,location");
        }
        while (reader.next(row)) {
            ++local.rows;
            try {
                if (row.fields.size() != 3) bad_row(row.line_no, "expected 3 fields");
                out.push_back(event_from_fields(row.fields[0], row.fields[1], row.fields[2],
                                                vocab, row.line_no));
            } catch (const ParseError& e) {
                record_skip(e);
            }
        }
    } else {
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (trim(line).empty()) continue;
            ++local.rows;
            try {
                json j = json::parse(line, nullptr, false);
                if (j.is_discarded() || !j.is_object()) bad_row(line_no, "invalid JSON object");
                if (!j.contains("participant_id") || !j.contains("timestamp") ||
                    !j.contains("location")) {
                    bad_row(line_no, "missing field");
                }
                if (!j["timestamp"].is_number_integer() || j["timestamp"].get<std::int64_t>() < 0) {
                    bad_row(line_no, "malformed timestamp");
                }
                std::string pid = j["participant_id"].is_string()
                                      ? j["participant_id"].get<std::string>()
                                      : std::string{};
                std::string loc =
                    j["location"].is_string() ? j["location"].get<std::string>() : std::string{};
                out.push_back(event_from_fields(pid, std::to_string(j["timestamp"].get<std::int64_t>()),
                                                loc, vocab, line_no));
            } catch (const ParseError& e) {
                record_skip(e);
            }
        }
    }
    if (stats) *stats = local;
    return out;
}

std::vector<ClinicalRecord> parse_clinical(std::istream& in, bool lenient, ParseStats* stats) {
    static const std::vector<std::string> kHeader = {
        "participant_id", "assessment_date", "mmse",   "adas_cog",    "hads_depression",
        "hads_anxiety",   "age",             "gender", "lives_alone", "diagnosis",
        "delta_mmse",     "delta_adas"};

    std::vector<ClinicalRecord> out;
    ParseStats local;
    CsvReader reader(in);
    CsvRow row;
    if (!reader.next(row)) {
        if (stats) *stats = local;
        return out;
    }
    if (row.fields != kHeader) {
        throw ParseError("line " + std::to_string(row.line_no) +
                         ": clinical header must be " + join_csv(kHeader));
    }
    while (reader.next(row)) {
        ++local.rows;
        try {
            if (row.fields.size() != kHeader.size()) {
                bad_row(row.line_no, "expected " + std::to_string(kHeader.size()) + " fields");
            }
            ClinicalRecord rec;
            rec.participant_id = row.fields[0];
            if (rec.participant_id.empty()) bad_row(row.line_no, "missing participant_id");
            auto date = parse_date(row.fields[1]);
            if (!date) bad_row(row.line_no, "malformed assessment_date '" + row.fields[1] + "'");
            rec.assessment_date = *date;

            std::int64_t mmse = 0;
            if (!parse_int64(row.fields[2], mmse) || mmse < 0 || mmse > 30) {
                bad_row(row.line_no, "mmse must be an integer in [0,30]");
            }
            rec.mmse = static_cast<int>(mmse);
            if (!parse_double(row.fields[3], rec.adas_cog) || rec.adas_cog < 0.0) {
                bad_row(row.line_no, "adas_cog must be a nonnegative real");
            }
            std::int64_t hd = 0, ha = 0;
            if (!parse_int64(row.fields[4], hd) || hd < 0 || hd > 21) {
                bad_row(row.line_no, "hads_depression must be an integer in [0,21]");
            }
            if (!parse_int64(row.fields[5], ha) || ha < 0 || ha > 21) {
                bad_row(row.line_no, "hads_anxiety must be an integer in [0,21]");
            }
            rec.hads_depression = static_cast<int>(hd);
            rec.hads_anxiety = static_cast<int>(ha);
            if (!parse_double(row.fields[6], rec.age) || rec.age <= 0.0) {
                bad_row(row.line_no, "age must be a positive real");
            }
            rec.gender = std::string(trim(row.fields[7]));
            if (rec.gender.empty()) bad_row(row.line_no, "missing gender");
            std::string la{trim(row.fields[8])};
            if (la == "true" || la == "1") {
                rec.lives_alone = true;
            } else if (la == "false" || la == "0") {
                rec.lives_alone = false;
            } else {
                bad_row(row.line_no, "lives_alone must be true/false/1/0");
            }
            rec.diagnosis = std::string(trim(row.fields[9]));
            if (rec.diagnosis.empty()) bad_row(row.line_no, "missing diagnosis");
            for (int t = 0; t < 2; ++t) {
                const std::string& field = row.fields[10 + t];
                if (trim(field).empty()) continue;
                double v = 0.0;
                if (!parse_double(field, v)) {
                    bad_row(row.line_no,
                            std::string("malformed ") + (t == 0 ? "delta_mmse" : "delta_adas"));
                }
                (t == 0 ? rec.delta_mmse : rec.delta_adas) = v;
            }
            out.push_back(std::move(rec));
        } catch (const ParseError& e) {
            if (!lenient) throw;
            ++local.skipped;
        }
    }
    if (stats) *stats = local;
    return out;
}

CohortIndex segment_days(std::vector<SensorEvent> events, std::vector<ClinicalRecord> clinical,
                         int tz_offset_seconds) {
    CohortIndex index;
    index.tz_offset_seconds = tz_offset_seconds;

    // Count exact duplicates before any reordering.
    {
        std::map<std::pair<std::string, std::pair<std::int64_t, std::string>>, std::size_t> seen;
        for (const auto& e : events) {
            auto& n = seen[{e.participant_id, {e.timestamp, e.location}}];
            if (n > 0) ++index.duplicate_events;
            ++n;
        }
    }

    std::map<std::pair<std::string, Date>, std::vector<SensorEvent>> buckets;
    for (auto& e : events) {
        Date d = local_date_of(e.timestamp, tz_offset_seconds);
        buckets[{e.participant_id, d}].push_back(std::move(e));
    }
    for (auto& [key, evs] : buckets) {
        std::stable_sort(evs.begin(), evs.end(), [](const SensorEvent& a, const SensorEvent& b) {
            return a.timestamp < b.timestamp;
        });
        index.days.push_back(DayEvents{key.first, key.second, std::move(evs)});
    }

    std::set<std::string> with_events;
    for (const auto& d : index.days) with_events.insert(d.participant_id);

    std::stable_sort(clinical.begin(), clinical.end(),
                     [](const ClinicalRecord& a, const ClinicalRecord& b) {
                         return std::tie(a.participant_id, a.assessment_date) <
                                std::tie(b.participant_id, b.assessment_date);
                     });
    for (auto& rec : clinical) {
        if (with_events.count(rec.participant_id)) {
            index.clinical.push_back(std::move(rec));
        } else {
            ++index.clinical_without_events;
        }
    }
    return index;
}

std::string serialize_day(const DayEvents& day) {
    json j;
    j["participant_id"] = day.participant_id;
    j["date"] = to_string(day.date);
    json evs = json::array();
    for (const auto& e : day.events) {
        evs.push_back(json{{"t", e.timestamp}, {"location", e.location}});
    }
    j["events"] = std::move(evs);
    return j.dump();
}

std::string serialize_clinical(const ClinicalRecord& rec) {
    json j;
    j["participant_id"] = rec.participant_id;
    j["assessment_date"] = to_string(rec.assessment_date);
    j["mmse"] = rec.mmse;
    j["adas_cog"] = rec.adas_cog;
    j["hads_depression"] = rec.hads_depression;
    j["hads_anxiety"] = rec.hads_anxiety;
    j["age"] = rec.age;
    j["gender"] = rec.gender;
    j["lives_alone"] = rec.lives_alone;
    j["diagnosis"] = rec.diagnosis;
    if (rec.delta_mmse) j["delta_mmse"] = *rec.delta_mmse;
    if (rec.delta_adas) j["delta_adas"] = *rec.delta_adas;
    return j.dump();
}

void write_cohort(const CohortIndex& index, const std::string& dir) {
    std::filesystem::create_directories(dir);
    {
        std::string body;
        for (const auto& d : index.days) {
            body += serialize_day(d);
            body += '\n';
        }
        write_file_atomic(dir + "/days.jsonl", body);
    }
    {
        std::string body;
        for (const auto& r : index.clinical) {
            body += serialize_clinical(r);
            body += '\n';
        }
        write_file_atomic(dir + "/clinical.jsonl", body);
    }
    {
        std::size_t n_events = 0;
        std::set<std::string> pids;
        for (const auto& d : index.days) {
            n_events += d.events.size();
            pids.insert(d.participant_id);
        }
        json s;
        s["participants"] = pids.size();
        s["days"] = index.days.size();
        s["events"] = n_events;
        s["tz_offset"] = format_tz_offset(index.tz_offset_seconds);
        s["duplicate_events"] = index.duplicate_events;
        s["clinical_records"] = index.clinical.size();
        s["clinical_without_events"] = index.clinical_without_events;
        s["events_skipped"] = index.events_skipped;
        s["clinical_skipped"] = index.clinical_skipped;
        write_file_atomic(dir + "/summary.json", s.dump(2) + "\n");
    }
}

CohortIndex read_cohort(const std::string& dir) {
    CohortIndex index;
    {
        std::ifstream in(dir + "/summary.json");
        if (in) {
            json s = json::parse(in, nullptr, false);
            if (!s.is_discarded() && s.contains("tz_offset")) {
                index.tz_offset_seconds = parse_tz_offset(s["tz_offset"].get<std::string>());
            }
        }
    }
    {
        std::ifstream in(dir + "/days.jsonl");
        if (!in) throw ParseError("cannot open " + dir + "/days.jsonl");
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (trim(line).empty()) continue;
            json j = json::parse(line, nullptr, false);
            if (j.is_discarded()) bad_row(line_no, "invalid JSON in days.jsonl");
            DayEvents d;
            d.participant_id = j.at("participant_id").get<std::string>();
            auto date = parse_date(j.at("date").get<std::string>());
            if (!date) bad_row(line_no, "invalid date in days.jsonl");
            d.date = *date;
            for (const auto& ev : j.at("events")) {
                d.events.push_back(SensorEvent{d.participant_id, ev.at("t").get<std::int64_t>(),
                                               ev.at("location").get<std::string>()});
            }
            index.days.push_back(std::move(d));
        }
    }
    {
        std::ifstream in(dir + "/clinical.jsonl");
        if (!in) throw ParseError("cannot open " + dir + "/clinical.jsonl");
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (trim(line).empty()) continue;
            json j = json::parse(line, nullptr, false);
            if (j.is_discarded()) bad_row(line_no, "invalid JSON in clinical.jsonl");
            ClinicalRecord r;
            r.participant_id = j.at("participant_id").get<std::string>();
            auto date = parse_date(j.at("assessment_date").get<std::string>());
            if (!date) bad_row(line_no, "invalid date in clinical.jsonl");
            r.assessment_date = *date;
            r.mmse = j.at("mmse").get<int>();
            r.adas_cog = j.at("adas_cog").get<double>();
            r.hads_depression = j.at("hads_depression").get<int>();
            r.hads_anxiety = j.at("hads_anxiety").get<int>();
            r.age = j.at("age").get<double>();
            r.gender = j.at("gender").get<std::string>();
            r.lives_alone = j.at("lives_alone").get<bool>();
            r.diagnosis = j.at("diagnosis").get<std::string>();
            if (j.contains("delta_mmse")) r.delta_mmse = j["delta_mmse"].get<double>();
            if (j.contains("delta_adas")) r.delta_adas = j["delta_adas"].get<double>();
            index.clinical.push_back(std::move(r));
        }
    }
    return index;
}

}  // namespace latent
