#include "latent/analyze.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "latent/stats.hpp"

namespace latent {

std::optional<std::size_t> PeriodGrid::participant_index(const std::string& id) const {
    auto it = std::lower_bound(participants.begin(), participants.end(), id);
    if (it == participants.end() || *it != id) return std::nullopt;
    return static_cast<std::size_t>(it - participants.begin());
}

const std::vector<double>* PeriodGrid::cell(std::size_t participant, std::size_t period) const {
    auto it = cells.find({participant, period});
    return it == cells.end() ? nullptr : &it->second;
}

PeriodGrid build_period_grid(const std::vector<StateVector>& rows, int period_months,
                             std::optional<Date> start_date) {
    if (period_months < 1) throw ConfigError("period months must be positive");
    PeriodGrid grid;
    if (rows.empty()) return grid;

    grid.k = static_cast<int>(rows.front().values.size());
    Date min_start = rows.front().period_start;
    Date max_end = rows.front().period_end;
    for (const auto& r : rows) {
        if (static_cast<int>(r.values.size()) != grid.k) {
            throw DomainError("state vectors disagree on k");
        }
        if (!(r.period_start < r.period_end)) {
            throw DomainError("state vector for " + r.participant_id +
                              " has an empty or inverted period");
        }
        min_start = std::min(min_start, r.period_start);
        max_end = std::max(max_end, r.period_end);
    }
    Date origin = start_date.value_or(min_start);
    if (origin > min_start) {
        throw DomainError("grid start date lies after the earliest state vector");
    }

    // consecutive [origin + p*months, origin + (p+1)*months) spans until the
    // data is covered
    Date cursor = origin;
    while (cursor < max_end) {
        Date next = add_months(cursor, period_months);
        grid.periods.emplace_back(cursor, next);
        cursor = next;
    }

    std::set<std::string> ids;
    for (const auto& r : rows) ids.insert(r.participant_id);
    grid.participants.assign(ids.begin(), ids.end());

    // overlap check among stamped periods of the same participant
    std::map<std::string, std::vector<std::pair<Date, Date>>> stamped;
    for (const auto& r : rows) stamped[r.participant_id].emplace_back(r.period_start, r.period_end);
    for (auto& [pid, spans] : stamped) {
        std::sort(spans.begin(), spans.end());
        for (std::size_t i = 1; i < spans.size(); ++i) {
            if (spans[i].first < spans[i - 1].second) {
                throw DomainError("overlapping period definitions for participant " + pid);
            }
        }
    }

    for (const auto& r : rows) {
        // period containing period_start (half-open)
        std::size_t p = grid.periods.size();
        for (std::size_t i = 0; i < grid.periods.size(); ++i) {
            if (r.period_start >= grid.periods[i].first && r.period_start < grid.periods[i].second) {
                p = i;
                break;
            }
        }
        if (p == grid.periods.size()) {
            throw DomainError("state vector for " + r.participant_id +
                              " falls outside the period grid");
        }
        auto part = grid.participant_index(r.participant_id);
        auto key = std::make_pair(*part, p);
        if (grid.cells.count(key)) {
            throw DomainError("participant " + r.participant_id +
                              " has two state vectors in one grid period");
        }
        grid.cells.emplace(key, r.values);
    }
    return grid;
}

PeriodSimilarity cosine_similarity_matrix(const PeriodGrid& grid, std::size_t period) {
    if (period >= grid.periods.size()) throw DomainError("period index out of range");
    PeriodSimilarity sim;
    for (std::size_t i = 0; i < grid.participants.size(); ++i) {
        if (grid.cell(i, period)) sim.participants.push_back(grid.participants[i]);
    }
    const std::size_t n = sim.participants.size();
    if (n < 2) throw DomainError("cosine similarity needs at least 2 participants in the period");
    std::vector<const std::vector<double>*> vecs;
    vecs.reserve(n);
    for (const auto& id : sim.participants) {
        vecs.push_back(grid.cell(*grid.participant_index(id), period));
    }
    sim.matrix = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        sim.matrix(i, i) = l2_norm(*vecs[i]) == 0.0 ? 0.0 : 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            double c = cosine_similarity(*vecs[i], *vecs[j]);
            sim.matrix(i, j) = c;
            sim.matrix(j, i) = c;
        }
    }
    return sim;
}

std::map<std::string, std::vector<double>> participant_mean_states(const PeriodGrid& grid) {
    std::map<std::string, std::vector<double>> out;
    for (std::size_t i = 0; i < grid.participants.size(); ++i) {
        std::vector<double> acc(static_cast<std::size_t>(grid.k), 0.0);
        std::size_t count = 0;
        for (std::size_t p = 0; p < grid.periods.size(); ++p) {
            if (const auto* v = grid.cell(i, p)) {
                for (std::size_t s = 0; s < acc.size(); ++s) acc[s] += (*v)[s];
                ++count;
            }
        }
        if (count == 0) continue;
        double total = 0.0;
        for (double v : acc) total += v;
        if (total > 0.0) {
            for (double& v : acc) v /= total;
        }
        out.emplace(grid.participants[i], std::move(acc));
    }
    return out;
}

std::map<std::string, const ClinicalRecord*> latest_clinical(
    const std::vector<ClinicalRecord>& clinical) {
    std::map<std::string, const ClinicalRecord*> out;
    for (const auto& rec : clinical) {
        auto [it, fresh] = out.try_emplace(rec.participant_id, &rec);
        if (!fresh && rec.assessment_date > it->second->assessment_date) it->second = &rec;
    }
    return out;
}

std::optional<double> clinical_metric_value(const ClinicalRecord& rec, const std::string& metric) {
    if (metric == "mmse") return static_cast<double>(rec.mmse);
    if (metric == "adas_cog") return rec.adas_cog;
    if (metric == "hads_depression") return static_cast<double>(rec.hads_depression);
    if (metric == "hads_anxiety") return static_cast<double>(rec.hads_anxiety);
    if (metric == "age") return rec.age;
    if (metric == "delta_mmse") return rec.delta_mmse;
    if (metric == "delta_adas") return rec.delta_adas;
    throw ConfigError("unknown clinical metric '" + metric + "'");
}

std::vector<CorrelationCell> correlate_states_clinical(
    const PeriodGrid& grid, const std::vector<ClinicalRecord>& clinical,
    const std::vector<std::string>& metrics) {
    auto states = participant_mean_states(grid);
    auto records = latest_clinical(clinical);

    std::vector<CorrelationCell> out;
    for (int s = 0; s < grid.k; ++s) {
        for (const auto& metric : metrics) {
            CorrelationCell cell;
            cell.state = s + 1;
            cell.metric = metric;
            std::vector<double> xs, ys;
            for (const auto& [pid, vec] : states) {
                auto rec = records.find(pid);
                if (rec == records.end()) continue;
                auto value = clinical_metric_value(*rec->second, metric);
                if (!value) continue;
                xs.push_back(vec[static_cast<std::size_t>(s)]);
                ys.push_back(*value);
            }
            cell.n = xs.size();
            if (cell.n < 3) {
                cell.note = "insufficient matched pairs";
            } else {
                auto r = pearson(xs, ys);
                if (!r) {
                    cell.note = "zero-variance column";
                } else {
                    cell.r = *r;
                    cell.p = pearson_pvalue(*r, cell.n);
                }
            }
            out.push_back(std::move(cell));
        }
    }
    return out;
}

StateClusterReport cluster_state_vectors(const PeriodGrid& grid,
                                         const std::vector<ClinicalRecord>& clinical, int k_lo,
                                         int k_hi, std::uint64_t seed) {
    auto states = participant_mean_states(grid);
    StateClusterReport report;
    for (const auto& [pid, vec] : states) report.participants.push_back(pid);
    const std::size_t n = report.participants.size();
    if (n < static_cast<std::size_t>(std::max(k_lo, k_hi)) + 1) {
        throw DomainError("state-vector clustering needs more participants than max(k)");
    }
    Matrix points(n, static_cast<std::size_t>(grid.k));
    for (std::size_t i = 0; i < n; ++i) {
        const auto& vec = states.at(report.participants[i]);
        for (std::size_t j = 0; j < vec.size(); ++j) points(i, j) = vec[j];
    }
    KSelection sel = select_k(points, k_lo, k_hi, seed);
    report.k = sel.k_star;
    report.silhouettes = sel.silhouettes;
    ClusterModel model =
        kmeans(points, sel.k_star, derive_seed(seed, "select-k-" + std::to_string(sel.k_star)));
    report.labels = model.assignments;

    auto records = latest_clinical(clinical);
    for (int c = 0; c < report.k; ++c) {
        for (const auto& metric : default_clinical_metrics()) {
            std::vector<double> values;
            for (std::size_t i = 0; i < n; ++i) {
                if (report.labels[i] != c) continue;
                auto rec = records.find(report.participants[i]);
                if (rec == records.end()) continue;
                auto value = clinical_metric_value(*rec->second, metric);
                if (value) values.push_back(*value);
            }
            if (values.empty()) continue;
            StateClusterMetric m;
            m.cluster = c;
            m.metric = metric;
            m.mean = mean_of(values);
            m.stddev = std::sqrt(variance_of(values));
            m.n = values.size();
            report.metrics.push_back(m);
        }
    }
    return report;
}

}  // namespace latent
