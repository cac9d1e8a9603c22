#pragma once

#include <string>
#include <vector>

#include "latent/core.hpp"
#include "latent/transition.hpp"

namespace latent {

/// A (participant, date) row carrying one or more numeric columns; covers the
/// 2-D point files and any embedding-shaped CSV.
struct PointRow {
    std::string participant_id;
    Date date;
    std::vector<double> values;
};

/// Reads participant_id,date,<numeric...> with a consistent column count.
std::vector<PointRow> read_point_rows(const std::string& path);

/// participant_id,date,x,y
void write_points_csv(const std::vector<PointRow>& rows, const std::string& path);

struct LabelRow {
    std::string participant_id;
    Date date;
    int cluster = 0;
};

void write_labels_csv(const std::vector<LabelRow>& rows, const std::string& path);
std::vector<LabelRow> read_labels_csv(const std::string& path);

void write_state_vectors_csv(const std::vector<StateVector>& rows, const std::string& path);
std::vector<StateVector> read_state_vectors_csv(const std::string& path);

void write_kl_trace_csv(const std::vector<std::pair<int, double>>& trace, const std::string& path);

}  // namespace latent
