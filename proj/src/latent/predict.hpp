#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "latent/core.hpp"
#include "latent/ingest.hpp"
#include "latent/linalg.hpp"
#include "latent/preprocess.hpp"

namespace latent {

enum class FeatureBlock { baseline, proportion_baseline, random_word, state, characteristics };

struct FeatureSetSpec {
    std::string name;
    std::vector<FeatureBlock> blocks;
    /// Current MMSE/ADAS-Cog join the characteristics block only for delta
    /// targets, and only when this is set.
    bool include_current_scores = true;
    std::uint64_t random_word_seed = 0;
};

/// Parses "baseline", "state+characteristics", ... ('+' unions blocks).
FeatureSetSpec parse_feature_set(std::string_view name, std::uint64_t random_word_seed);

enum class Target { mmse, adascog, delta_mmse, delta_adascog };

Target target_from(std::string_view name);
std::string to_string(Target t);
bool is_delta_target(Target t);
std::optional<double> target_value(const ClinicalRecord& rec, Target t);

struct DesignMatrix {
    std::vector<std::string> row_keys;  // participant ids, sorted
    std::vector<std::string> columns;
    Matrix x;
    std::vector<double> y;
    std::vector<std::string> dropped_columns;                      // constant across rows
    std::vector<std::pair<std::string, std::string>> excluded;     // (participant, reason)
};

/// Builds the participant-level design matrix for one feature set, target and
/// analysis window (the last `window_days` recorded days per participant).
/// Participants missing any required input are excluded with a reason, never
/// imputed.
DesignMatrix assemble_features(const std::vector<DailyActivitySequence>& days,
                               const std::map<std::string, std::vector<double>>& state_vectors,
                               const std::vector<ClinicalRecord>& clinical,
                               const Vocabulary& vocab, const FeatureSetSpec& spec, Target target,
                               int window_days);

struct RidgeModel {
    std::vector<double> weights;
    double intercept = 0.0;
};

/// Closed-form ridge via the normal equations with an unpenalized intercept
/// (columns and target are centered internally).
RidgeModel ridge_fit(const Matrix& x, const std::vector<double>& y, double lambda);

double ridge_predict(const RidgeModel& model, const std::vector<double>& row);

struct LoocvResult {
    double mae = 0.0;
    double rmse = 0.0;
    std::vector<double> predictions;  // aligned with the design matrix rows
    std::vector<double> abs_errors;
    std::vector<double> sq_errors;
    std::vector<double> lambda_used;  // per fold
};

/// Leave-one-out evaluation. Standardization statistics and (when the grid
/// has several values) the inner-LOOCV lambda choice are recomputed from the
/// n-1 training rows of every fold, so nothing leaks from the held-out row.
LoocvResult loocv_evaluate(const DesignMatrix& dm, const std::vector<double>& lambda_grid);

struct ReportRow {
    std::string model = "ridge";
    std::string feature_set;
    std::string target;
    int window_days = 0;
    double mae = 0.0, mae_lo = 0.0, mae_hi = 0.0;
    double rmse = 0.0, rmse_lo = 0.0, rmse_hi = 0.0;
    std::size_t n = 0;
};

struct PredictionDetail {
    std::string feature_set;
    std::string target;
    int window_days = 0;
    std::string participant_id;
    double y_true = 0.0;
    double y_pred = 0.0;
};

struct ExperimentReport {
    std::vector<ReportRow> rows;
    std::vector<PredictionDetail> predictions;
    std::vector<std::string> notes;  // skipped combinations, exclusions
};

struct ExperimentRequest {
    std::vector<std::string> set_names;
    std::vector<Target> targets;
    std::vector<int> windows;
    std::vector<double> lambda_grid = {0.01, 0.1, 1.0, 10.0};
    int bootstrap_resamples = 1000;
    std::uint64_t seed = 0;
};

/// Full cross of feature sets x targets x windows. Delta targets with a
/// characteristics block are evaluated twice: with current cognitive scores
/// in the features and without (feature set suffixed "_nocurrent").
ExperimentReport run_experiment_grid(const std::vector<DailyActivitySequence>& days,
                                     const std::map<std::string, std::vector<double>>& state_vectors,
                                     const std::vector<ClinicalRecord>& clinical,
                                     const Vocabulary& vocab, const ExperimentRequest& request);

void write_report_csv(const ExperimentReport& report, const std::string& path);
void write_report_json(const ExperimentReport& report, const std::string& path);
void write_predictions_csv(const ExperimentReport& report, const std::string& path);

}  // namespace latent
