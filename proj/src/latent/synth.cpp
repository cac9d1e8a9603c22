#include "latent/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "latent/csv.hpp"

namespace latent {

using nlohmann::json;

void validate_archetype(const ArchetypeSpec& spec, const Vocabulary& vocab) {
    if (spec.id.empty()) throw ConfigError("archetype needs an id");
    const std::size_t m = spec.states.size();
    if (m < 2) throw ConfigError("archetype '" + spec.id + "' needs at least 2 states");
    for (const auto& s : spec.states) {
        if (!vocab.is_room(s) && s != Vocabulary::kNowhere) {
            throw ConfigError("archetype '" + spec.id + "' uses unknown state '" + s + "'");
        }
    }
    for (const Matrix* chain : {&spec.am_chain, &spec.pm_chain}) {
        if (chain->rows != m || chain->cols != m) {
            throw ConfigError("archetype '" + spec.id + "' chain shape mismatch");
        }
        for (std::size_t i = 0; i < m; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                if ((*chain)(i, j) < 0.0) {
                    throw ConfigError("archetype '" + spec.id + "' has a negative chain entry");
                }
                row += (*chain)(i, j);
            }
            if (std::fabs(row - 1.0) > 1e-9) {
                throw ConfigError("archetype '" + spec.id + "' chain row " + std::to_string(i) +
                                  " sums to " + fmt_double(row) + ", not 1");
            }
        }
    }
    if (!(spec.wake_hour >= 0.0 && spec.wake_hour < spec.sleep_start_hour &&
          spec.sleep_start_hour <= 24.0)) {
        throw ConfigError("archetype '" + spec.id + "' schedule must satisfy 0 <= wake < sleep <= 24");
    }
    if (spec.phase_switch_hour < spec.wake_hour || spec.phase_switch_hour > spec.sleep_start_hour) {
        throw ConfigError("archetype '" + spec.id + "' phase switch must fall inside waking hours");
    }
    if (spec.min_events_per_slot < 1 || spec.max_events_per_slot < spec.min_events_per_slot) {
        throw ConfigError("archetype '" + spec.id + "' has an invalid events-per-slot range");
    }
}

namespace {

// Row-stochastic chain where every state drifts toward `favored` and sticks
// to itself; `nowhere_w` shifts mass onto the nowhere state when present.
Matrix biased_chain(const std::vector<std::string>& states, const std::string& favored,
                    double favor_w, double stick_w, double nowhere_w = 0.0) {
    const std::size_t m = states.size();
    Matrix chain(m, m);
    for (std::size_t i = 0; i < m; ++i) {
        double total = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            double w = 1.0;
            if (states[j] == favored) w += favor_w;
            if (j == i) w += stick_w;
            if (states[j] == Vocabulary::kNowhere) w += nowhere_w;
            chain(i, j) = w;
            total += w;
        }
        for (std::size_t j = 0; j < m; ++j) chain(i, j) /= total;
    }
    return chain;
}

}  // namespace

std::vector<ArchetypeSpec> default_archetypes() {
    const std::vector<std::string> states = {"lounge",  "kitchen", "hallway",
                                             "bedroom", "bathroom", "nowhere"};
    std::vector<ArchetypeSpec> out;

    ArchetypeSpec kitchen_first;
    kitchen_first.id = "kitchen_mornings";
    kitchen_first.states = states;
    kitchen_first.am_chain = biased_chain(states, "kitchen", 24.0, 10.0);
    kitchen_first.pm_chain = biased_chain(states, "lounge", 24.0, 10.0);
    kitchen_first.clinical =
        ClinicalProfile{27.0, 1.0, 12.0, 2.0, 0.6, 0.5, -1.0, 1.0, 4.0, 4.0};
    out.push_back(std::move(kitchen_first));

    ArchetypeSpec lounge_first;
    lounge_first.id = "lounge_mornings";
    lounge_first.states = states;
    lounge_first.am_chain = biased_chain(states, "lounge", 24.0, 10.0);
    lounge_first.pm_chain = biased_chain(states, "kitchen", 24.0, 10.0);
    lounge_first.clinical =
        ClinicalProfile{19.0, 1.0, 30.0, 2.0, -1.5, 0.5, 3.0, 1.0, 8.0, 7.0};
    out.push_back(std::move(lounge_first));

    ArchetypeSpec low_activity;
    low_activity.id = "low_activity";
    low_activity.states = states;
    low_activity.am_chain = biased_chain(states, "bedroom", 6.0, 10.0, 18.0);
    low_activity.pm_chain = low_activity.am_chain;
    low_activity.wake_hour = 9.5;
    low_activity.sleep_start_hour = 21.0;
    low_activity.phase_switch_hour = 15.25;
    low_activity.clinical =
        ClinicalProfile{23.0, 1.0, 20.0, 2.0, -0.5, 0.5, 1.0, 1.0, 6.0, 9.0};
    out.push_back(std::move(low_activity));

    Vocabulary vocab = Vocabulary::defaults();
    for (const auto& a : out) validate_archetype(a, vocab);
    return out;
}

namespace {

Matrix chain_from_json(const json& rows, std::size_t m, const std::string& id) {
    if (!rows.is_array() || rows.size() != m) {
        throw ConfigError("archetype '" + id + "': chain must be an " + std::to_string(m) + "x" +
                          std::to_string(m) + " array");
    }
    Matrix chain(m, m);
    for (std::size_t i = 0; i < m; ++i) {
        if (!rows[i].is_array() || rows[i].size() != m) {
            throw ConfigError("archetype '" + id + "': chain row " + std::to_string(i) +
                              " has wrong length");
        }
        for (std::size_t j = 0; j < m; ++j) chain(i, j) = rows[i][j].get<double>();
    }
    return chain;
}

json chain_to_json(const Matrix& chain) {
    json rows = json::array();
    for (std::size_t i = 0; i < chain.rows; ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < chain.cols; ++j) row.push_back(chain(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

std::vector<ArchetypeSpec> load_archetypes(const std::string& path, const Vocabulary& vocab) {
    json j = json::parse(read_file(path), nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("archetypes")) {
        throw ConfigError("archetype file must be a JSON object with an 'archetypes' array: " +
                          path);
    }
    std::vector<ArchetypeSpec> out;
    for (const auto& a : j["archetypes"]) {
        ArchetypeSpec spec;
        spec.id = a.at("id").get<std::string>();
        for (const auto& s : a.at("states")) spec.states.push_back(s.get<std::string>());
        spec.am_chain = chain_from_json(a.at("am_chain"), spec.states.size(), spec.id);
        spec.pm_chain = a.contains("pm_chain")
                            ? chain_from_json(a["pm_chain"], spec.states.size(), spec.id)
                            : spec.am_chain;
        spec.phase_switch_hour = a.value("phase_switch_hour", spec.phase_switch_hour);
        spec.sleep_start_hour = a.value("sleep_start_hour", spec.sleep_start_hour);
        spec.wake_hour = a.value("wake_hour", spec.wake_hour);
        spec.schedule_jitter_hours = a.value("schedule_jitter_hours", spec.schedule_jitter_hours);
        spec.min_events_per_slot = a.value("min_events_per_slot", spec.min_events_per_slot);
        spec.max_events_per_slot = a.value("max_events_per_slot", spec.max_events_per_slot);
        if (a.contains("clinical")) {
            const auto& c = a["clinical"];
            spec.clinical.mmse_mean = c.value("mmse_mean", spec.clinical.mmse_mean);
            spec.clinical.mmse_sd = c.value("mmse_sd", spec.clinical.mmse_sd);
            spec.clinical.adas_mean = c.value("adas_mean", spec.clinical.adas_mean);
            spec.clinical.adas_sd = c.value("adas_sd", spec.clinical.adas_sd);
            spec.clinical.delta_mmse_mean = c.value("delta_mmse_mean", spec.clinical.delta_mmse_mean);
            spec.clinical.delta_mmse_sd = c.value("delta_mmse_sd", spec.clinical.delta_mmse_sd);
            spec.clinical.delta_adas_mean = c.value("delta_adas_mean", spec.clinical.delta_adas_mean);
            spec.clinical.delta_adas_sd = c.value("delta_adas_sd", spec.clinical.delta_adas_sd);
            spec.clinical.hads_dep_mean = c.value("hads_dep_mean", spec.clinical.hads_dep_mean);
            spec.clinical.hads_anx_mean = c.value("hads_anx_mean", spec.clinical.hads_anx_mean);
        }
        validate_archetype(spec, vocab);
        out.push_back(std::move(spec));
    }
    if (out.empty()) throw ConfigError("archetype file lists no archetypes: " + path);
    return out;
}

void write_archetypes(const std::vector<ArchetypeSpec>& specs, const std::string& path) {
    json j;
    j["archetypes"] = json::array();
    for (const auto& a : specs) {
        json e;
        e["id"] = a.id;
        e["states"] = a.states;
        e["am_chain"] = chain_to_json(a.am_chain);
        e["pm_chain"] = chain_to_json(a.pm_chain);
        e["phase_switch_hour"] = a.phase_switch_hour;
        e["sleep_start_hour"] = a.sleep_start_hour;
        e["wake_hour"] = a.wake_hour;
        e["schedule_jitter_hours"] = a.schedule_jitter_hours;
        e["min_events_per_slot"] = a.min_events_per_slot;
        e["max_events_per_slot"] = a.max_events_per_slot;
        e["clinical"] = json{{"mmse_mean", a.clinical.mmse_mean},
                             {"mmse_sd", a.clinical.mmse_sd},
                             {"adas_mean", a.clinical.adas_mean},
                             {"adas_sd", a.clinical.adas_sd},
                             {"delta_mmse_mean", a.clinical.delta_mmse_mean},
                             {"delta_mmse_sd", a.clinical.delta_mmse_sd},
                             {"delta_adas_mean", a.clinical.delta_adas_mean},
                             {"delta_adas_sd", a.clinical.delta_adas_sd},
                             {"hads_dep_mean", a.clinical.hads_dep_mean},
                             {"hads_anx_mean", a.clinical.hads_anx_mean}};
        j["archetypes"].push_back(std::move(e));
    }
    write_file_atomic(path, j.dump(2) + "\n");
}

std::vector<double> chain_stationary(const Matrix& chain) {
    const std::size_t m = chain.rows;
    std::vector<double> p(m, 1.0 / static_cast<double>(m)), next(m);
    for (int iter = 0; iter < 500; ++iter) {
        for (std::size_t j = 0; j < m; ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < m; ++i) acc += p[i] * chain(i, j);
            next[j] = acc;
        }
        double diff = 0.0;
        for (std::size_t j = 0; j < m; ++j) diff += std::fabs(next[j] - p[j]);
        p = next;
        if (diff < 1e-13) break;
    }
    return p;
}

namespace {

std::size_t sample_from(Rng& g, const double* weights, std::size_t m) {
    double r = uniform01(g);
    double acc = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        acc += weights[j];
        if (r < acc) return j;
    }
    return m - 1;
}

int clamp_round(double v, int lo, int hi) {
    return std::clamp(static_cast<int>(std::lround(v)), lo, hi);
}

}  // namespace

SynthCohort generate_cohort(int n_participants, const std::vector<ArchetypeSpec>& archetypes,
                            int days_per_participant, std::uint64_t seed, Date start_date) {
    if (n_participants < 1) throw ConfigError("need at least one participant");
    if (archetypes.empty()) throw ConfigError("need at least one archetype");
    if (days_per_participant < 1) throw ConfigError("need at least one day per participant");

    static const char* kGenders[] = {"female", "male"};
    static const char* kDiagnoses[] = {"alzheimers", "vascular", "mixed"};

    SynthCohort cohort;
    for (int pi = 0; pi < n_participants; ++pi) {
        const ArchetypeSpec& arch = archetypes[static_cast<std::size_t>(pi) % archetypes.size()];
        char pid_buf[16];
        std::snprintf(pid_buf, sizeof pid_buf, "p%03d", pi + 1);
        std::string pid(pid_buf);
        cohort.truth.emplace_back(pid, arch.id);

        Rng g(derive_seed(seed, "participant:" + pid));
        const std::size_t m = arch.states.size();
        auto stationary = chain_stationary(arch.am_chain);

        for (int d = 0; d < days_per_participant; ++d) {
            Date date{start_date.days + d};
            const std::int64_t base = static_cast<std::int64_t>(date.days) * 86400;

            double wake = arch.wake_hour + gaussian(g) * arch.schedule_jitter_hours;
            double sleep = arch.sleep_start_hour + gaussian(g) * arch.schedule_jitter_hours;
            wake = std::clamp(wake, 0.5, arch.phase_switch_hour - 0.5);
            sleep = std::clamp(sleep, arch.phase_switch_hour + 0.5, 23.9);

            auto wake_sec = static_cast<std::int64_t>(wake * 3600.0);
            auto sleep_sec = static_cast<std::int64_t>(sleep * 3600.0);
            cohort.events.push_back(SensorEvent{pid, base + wake_sec, "bed-out"});
            cohort.events.push_back(SensorEvent{pid, base + sleep_sec, "bed-in"});

            std::size_t state = sample_from(g, stationary.data(), m);
            for (int slot = 0; slot < 72; ++slot) {
                double hour = slot / 3.0;
                if (hour < wake || hour >= sleep) continue;  // in bed
                const Matrix& chain =
                    hour < arch.phase_switch_hour ? arch.am_chain : arch.pm_chain;
                state = sample_from(g, &chain.data[state * m], m);
                const std::string& loc = arch.states[state];
                if (loc == Vocabulary::kNowhere) continue;
                int span = arch.max_events_per_slot - arch.min_events_per_slot + 1;
                int n_ev = arch.min_events_per_slot +
                           static_cast<int>(uniform_below(g, static_cast<std::size_t>(span)));
                std::int64_t slot_sec = static_cast<std::int64_t>(slot) * 1200;
                for (int e = 0; e < n_ev; ++e) {
                    auto offset = static_cast<std::int64_t>(uniform_below(g, 1200));
                    cohort.events.push_back(SensorEvent{pid, base + slot_sec + offset, loc});
                }
            }
        }

        Rng gc(derive_seed(seed, "clinical:" + pid));
        ClinicalRecord rec;
        rec.participant_id = pid;
        rec.assessment_date = Date{start_date.days + days_per_participant - 1};
        rec.mmse = clamp_round(arch.clinical.mmse_mean + gaussian(gc) * arch.clinical.mmse_sd, 0, 30);
        rec.adas_cog =
            std::max(0.0, arch.clinical.adas_mean + gaussian(gc) * arch.clinical.adas_sd);
        rec.hads_depression = clamp_round(arch.clinical.hads_dep_mean + gaussian(gc) * 1.5, 0, 21);
        rec.hads_anxiety = clamp_round(arch.clinical.hads_anx_mean + gaussian(gc) * 1.5, 0, 21);
        rec.age = std::clamp(80.0 + gaussian(gc) * 6.0, 60.0, 95.0);
        rec.gender = kGenders[uniform_below(gc, 2)];
        rec.lives_alone = uniform_below(gc, 2) == 1;
        rec.diagnosis = kDiagnoses[uniform_below(gc, 3)];
        rec.delta_mmse = arch.clinical.delta_mmse_mean + gaussian(gc) * arch.clinical.delta_mmse_sd;
        rec.delta_adas = arch.clinical.delta_adas_mean + gaussian(gc) * arch.clinical.delta_adas_sd;
        cohort.clinical.push_back(std::move(rec));
    }

    // events ordered by participant then time: valid, deterministic input for
    // the ingest stage
    std::stable_sort(cohort.events.begin(), cohort.events.end(),
                     [](const SensorEvent& a, const SensorEvent& b) {
                         return std::tie(a.participant_id, a.timestamp) <
                                std::tie(b.participant_id, b.timestamp);
                     });
    return cohort;
}

void write_cohort_files(const SynthCohort& cohort, const std::string& dir) {
    std::filesystem::create_directories(dir);
    {
        std::string body = "participant_id,timestamp,location\n";
        for (const auto& e : cohort.events) {
            body += csv_escape(e.participant_id) + ',' + std::to_string(e.timestamp) + ',' +
                    csv_escape(e.location) + '\n';
        }
        write_file_atomic(dir + "/events.csv", body);
    }
    {
        std::string body =
            "participant_id,assessment_date,mmse,adas_cog,hads_depression,hads_anxiety,age,"
            "gender,lives_alone,diagnosis,delta_mmse,delta_adas\n";
        for (const auto& r : cohort.clinical) {
            body += csv_escape(r.participant_id) + ',' + to_string(r.assessment_date) + ',' +
                    std::to_string(r.mmse) + ',' + fmt_double(r.adas_cog) + ',' +
                    std::to_string(r.hads_depression) + ',' + std::to_string(r.hads_anxiety) +
                    ',' + fmt_double(r.age) + ',' + csv_escape(r.gender) + ',' +
                    (r.lives_alone ? "true" : "false") + ',' + csv_escape(r.diagnosis) + ',' +
                    (r.delta_mmse ? fmt_double(*r.delta_mmse) : "") + ',' +
                    (r.delta_adas ? fmt_double(*r.delta_adas) : "") + '\n';
        }
        write_file_atomic(dir + "/clinical.csv", body);
    }
    {
        std::string body = "participant_id,archetype\n";
        for (const auto& [pid, arch] : cohort.truth) {
            body += csv_escape(pid) + ',' + csv_escape(arch) + '\n';
        }
        write_file_atomic(dir + "/truth.csv", body);
    }
}

}  // namespace latent
