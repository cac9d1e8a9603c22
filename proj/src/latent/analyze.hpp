#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "latent/cluster.hpp"
#include "latent/core.hpp"
#include "latent/ingest.hpp"
#include "latent/transition.hpp"

namespace latent {

/// Aligned multi-period view of state vectors: periods are consecutive
/// [start, start+months) spans; absent cells are simply missing.
struct PeriodGrid {
    std::vector<std::pair<Date, Date>> periods;  // ordered, non-overlapping
    std::vector<std::string> participants;       // sorted ids
    std::map<std::pair<std::size_t, std::size_t>, std::vector<double>> cells;  // (part, period)
    int k = 0;

    std::optional<std::size_t> participant_index(const std::string& id) const;
    const std::vector<double>* cell(std::size_t participant, std::size_t period) const;
};

/// Buckets stamped state vectors into aligned periods. The default start date
/// is the earliest period_start in the input. Throws on overlapping stamps or
/// two vectors of one participant landing in the same period.
PeriodGrid build_period_grid(const std::vector<StateVector>& rows, int period_months,
                             std::optional<Date> start_date = std::nullopt);

/// Participants present in the period (their grid order) and the symmetric
/// cosine matrix between their vectors.
struct PeriodSimilarity {
    std::vector<std::string> participants;
    Matrix matrix;
};

PeriodSimilarity cosine_similarity_matrix(const PeriodGrid& grid, std::size_t period);

struct CorrelationCell {
    int state = 0;           // 1-based, matching the state1..stateK columns
    std::string metric;
    std::optional<double> r;
    std::optional<double> p;
    std::size_t n = 0;
    std::string note;        // why the cell is absent, when it is
};

inline const std::vector<std::string>& default_clinical_metrics() {
    static const std::vector<std::string> metrics = {
        "mmse", "adas_cog", "hads_depression", "hads_anxiety",
        "age",  "delta_mmse", "delta_adas"};
    return metrics;
}

/// Pearson r (and two-sided p) between each state's per-participant mean
/// value and each clinical metric. Cells with fewer than 3 matched pairs or a
/// zero-variance column are marked absent with a reason.
std::vector<CorrelationCell> correlate_states_clinical(
    const PeriodGrid& grid, const std::vector<ClinicalRecord>& clinical,
    const std::vector<std::string>& metrics = default_clinical_metrics());

struct StateClusterMetric {
    int cluster = 0;
    std::string metric;
    double mean = 0.0;
    double stddev = 0.0;
    std::size_t n = 0;
};

struct StateClusterReport {
    std::vector<std::string> participants;  // clustered participants, sorted
    std::vector<int> labels;
    int k = 0;
    std::vector<std::pair<int, double>> silhouettes;
    std::vector<StateClusterMetric> metrics;
};

/// Re-clusters participants on their mean state vectors (silhouette-selected
/// k) and summarizes clinical metrics per cluster.
StateClusterReport cluster_state_vectors(const PeriodGrid& grid,
                                         const std::vector<ClinicalRecord>& clinical, int k_lo,
                                         int k_hi, std::uint64_t seed);

/// Per-participant mean state vector over all periods, renormalized to sum 1.
std::map<std::string, std::vector<double>> participant_mean_states(const PeriodGrid& grid);

/// Latest clinical record per participant (by assessment date).
std::map<std::string, const ClinicalRecord*> latest_clinical(
    const std::vector<ClinicalRecord>& clinical);

/// Numeric value of a metric on a record; nullopt when the record lacks it.
std::optional<double> clinical_metric_value(const ClinicalRecord& rec, const std::string& metric);

}  // namespace latent
