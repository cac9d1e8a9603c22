#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "latent/core.hpp"
#include "latent/ingest.hpp"
#include "latent/linalg.hpp"

namespace latent {

struct ClinicalProfile {
    double mmse_mean = 24.0, mmse_sd = 1.0;
    double adas_mean = 20.0, adas_sd = 2.0;
    double delta_mmse_mean = 0.0, delta_mmse_sd = 0.8;
    double delta_adas_mean = 0.0, delta_adas_sd = 1.2;
    double hads_dep_mean = 5.0, hads_anx_mean = 5.0;
};

/// A behavioral archetype: a sticky Markov chain over locations stepped once
/// per 20-minute slot (with separate morning and afternoon chains so the
/// time-of-day structure carries signal), a wake/sleep schedule, and the
/// clinical profile its participants are drawn from.
struct ArchetypeSpec {
    std::string id;
    std::vector<std::string> states;  // room tokens or "nowhere"
    Matrix am_chain;                  // row-stochastic over states
    Matrix pm_chain;                  // used from phase_switch_hour onwards
    double phase_switch_hour = 14.75;
    double sleep_start_hour = 22.5;
    double wake_hour = 7.0;
    double schedule_jitter_hours = 0.5;
    int min_events_per_slot = 1;
    int max_events_per_slot = 4;
    ClinicalProfile clinical;
};

void validate_archetype(const ArchetypeSpec& spec, const Vocabulary& vocab);

/// Three built-in archetypes: kitchen-forward mornings, lounge-forward
/// mornings (the mirror image, so marginal location counts match), and a
/// low-activity profile.
std::vector<ArchetypeSpec> default_archetypes();

std::vector<ArchetypeSpec> load_archetypes(const std::string& path, const Vocabulary& vocab);
void write_archetypes(const std::vector<ArchetypeSpec>& specs, const std::string& path);

struct SynthCohort {
    std::vector<SensorEvent> events;
    std::vector<ClinicalRecord> clinical;
    std::vector<std::pair<std::string, std::string>> truth;  // participant -> archetype id
};

/// Round-robin archetype assignment; every draw flows from the seed, so a
/// fixed seed reproduces the cohort byte for byte. Timestamps are UTC with a
/// +00:00 cohort offset.
SynthCohort generate_cohort(int n_participants, const std::vector<ArchetypeSpec>& archetypes,
                            int days_per_participant, std::uint64_t seed,
                            Date start_date = make_date(2024, 1, 1));

/// events.csv, clinical.csv, truth.csv under dir.
void write_cohort_files(const SynthCohort& cohort, const std::string& dir);

/// Stationary distribution of a row-stochastic chain (power iteration).
std::vector<double> chain_stationary(const Matrix& chain);

}  // namespace latent
