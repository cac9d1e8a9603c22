#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "latent/core.hpp"

namespace latent {

struct SensorEvent {
    std::string participant_id;
    std::int64_t timestamp = 0;  // seconds since epoch, UTC
    std::string location;

    bool operator==(const SensorEvent&) const = default;
};

struct ClinicalRecord {
    std::string participant_id;
    Date assessment_date;
    int mmse = 0;
    double adas_cog = 0.0;
    int hads_depression = 0;
    int hads_anxiety = 0;
    double age = 0.0;
    std::string gender;
    bool lives_alone = false;
    std::string diagnosis;
    std::optional<double> delta_mmse;
    std::optional<double> delta_adas;
};

/// One participant-day of events, sorted by timestamp (stable on ties).
struct DayEvents {
    std::string participant_id;
    Date date;
    std::vector<SensorEvent> events;
};

struct CohortIndex {
    std::vector<DayEvents> days;               // sorted by (participant, date)
    std::vector<ClinicalRecord> clinical;      // sorted by (participant, assessment_date)
    int tz_offset_seconds = 0;                 // fixed cohort offset used for day boundaries
    std::size_t duplicate_events = 0;          // exact (participant, ts, location) repeats
    std::size_t clinical_without_events = 0;   // records dropped for lacking event days
    std::size_t events_skipped = 0;            // lenient-mode skips
    std::size_t clinical_skipped = 0;
};

enum class EventFormat { csv, jsonl };

struct ParseStats {
    std::size_t rows = 0;
    std::size_t skipped = 0;  // lenient mode only
};

/// Parse raw sensor events. Strict mode aborts on the first bad row with its
/// 1-based line number; lenient mode skips bad rows and counts them.
std::vector<SensorEvent> parse_events(std::istream& in, EventFormat format,
                                      const Vocabulary& vocab, bool lenient,
                                      ParseStats* stats = nullptr);

std::vector<ClinicalRecord> parse_clinical(std::istream& in, bool lenient,
                                           ParseStats* stats = nullptr);

/// Assign each event to a participant-day by local calendar date under a
/// fixed UTC offset. Clinical records for participants with no event days are
/// dropped and counted.
CohortIndex segment_days(std::vector<SensorEvent> events,
                         std::vector<ClinicalRecord> clinical, int tz_offset_seconds);

// Canonical on-disk cohort layout: <dir>/days.jsonl, <dir>/clinical.jsonl,
// <dir>/summary.json. Serialization is deterministic given the index.
void write_cohort(const CohortIndex& index, const std::string& dir);
CohortIndex read_cohort(const std::string& dir);

std::string serialize_day(const DayEvents& day);
std::string serialize_clinical(const ClinicalRecord& rec);

}  // namespace latent
