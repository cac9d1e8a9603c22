#include "latent/predict.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <nlohmann/json.hpp>

#include "latent/csv.hpp"
#include "latent/stats.hpp"

namespace latent {

using nlohmann::json;

FeatureSetSpec parse_feature_set(std::string_view name, std::uint64_t random_word_seed) {
    FeatureSetSpec spec;
    spec.name = std::string(name);
    spec.random_word_seed = random_word_seed;
    for (const auto& part : split(name, '+')) {
        std::string token{trim(part)};
        if (token == "baseline") {
            spec.blocks.push_back(FeatureBlock::baseline);
        } else if (token == "proportion" || token == "proportion_baseline") {
            spec.blocks.push_back(FeatureBlock::proportion_baseline);
        } else if (token == "randomword" || token == "random_word") {
            spec.blocks.push_back(FeatureBlock::random_word);
        } else if (token == "state") {
            spec.blocks.push_back(FeatureBlock::state);
        } else if (token == "characteristics") {
            spec.blocks.push_back(FeatureBlock::characteristics);
        } else {
            throw ConfigError("unknown feature block '" + token + "'");
        }
    }
    if (spec.blocks.empty()) throw ConfigError("feature set must name at least one block");
    return spec;
}

Target target_from(std::string_view name) {
    if (name == "mmse") return Target::mmse;
    if (name == "adascog" || name == "adas_cog") return Target::adascog;
    if (name == "delta_mmse") return Target::delta_mmse;
    if (name == "delta_adascog" || name == "delta_adas") return Target::delta_adascog;
    throw ConfigError("unknown target '" + std::string(name) + "'");
}

std::string to_string(Target t) {
    switch (t) {
        case Target::mmse: return "mmse";
        case Target::adascog: return "adascog";
        case Target::delta_mmse: return "delta_mmse";
        case Target::delta_adascog: return "delta_adascog";
    }
    return "?";
}

bool is_delta_target(Target t) {
    return t == Target::delta_mmse || t == Target::delta_adascog;
}

std::optional<double> target_value(const ClinicalRecord& rec, Target t) {
    switch (t) {
        case Target::mmse: return static_cast<double>(rec.mmse);
        case Target::adascog: return rec.adas_cog;
        case Target::delta_mmse: return rec.delta_mmse;
        case Target::delta_adascog: return rec.delta_adas;
    }
    return std::nullopt;
}

namespace {

double random_word_value(std::uint64_t seed, const std::string& token) {
    return static_cast<double>(splitmix64(seed ^ fnv1a64(token)) >> 11) * 0x1.0p-53;
}

struct DayWindow {
    std::vector<const DailyActivitySequence*> days;  // the last window_days recorded days
};

std::map<std::string, DayWindow> windowed_days(const std::vector<DailyActivitySequence>& days,
                                               int window_days) {
    std::map<std::string, std::vector<const DailyActivitySequence*>> by_pid;
    for (const auto& d : days) by_pid[d.participant_id].push_back(&d);
    std::map<std::string, DayWindow> out;
    for (auto& [pid, list] : by_pid) {
        std::sort(list.begin(), list.end(),
                  [](const DailyActivitySequence* a, const DailyActivitySequence* b) {
                      return a->date < b->date;
                  });
        Date cutoff{list.back()->date.days - (window_days - 1)};
        DayWindow w;
        for (const auto* d : list) {
            if (d->date >= cutoff) w.days.push_back(d);
        }
        out.emplace(pid, std::move(w));
    }
    return out;
}

}  // namespace

DesignMatrix assemble_features(const std::vector<DailyActivitySequence>& days,
                               const std::map<std::string, std::vector<double>>& state_vectors,
                               const std::vector<ClinicalRecord>& clinical,
                               const Vocabulary& vocab, const FeatureSetSpec& spec, Target target,
                               int window_days) {
    if (window_days < 1) throw ConfigError("analysis window must be at least 1 day");
    const bool needs_days =
        std::any_of(spec.blocks.begin(), spec.blocks.end(), [](FeatureBlock b) {
            return b == FeatureBlock::baseline || b == FeatureBlock::proportion_baseline ||
                   b == FeatureBlock::random_word;
        });
    const bool needs_state = std::count(spec.blocks.begin(), spec.blocks.end(),
                                        FeatureBlock::state) > 0;
    const bool needs_chars = std::count(spec.blocks.begin(), spec.blocks.end(),
                                        FeatureBlock::characteristics) > 0;
    const bool add_current = needs_chars && is_delta_target(target) && spec.include_current_scores;

    auto records = [&] {
        std::map<std::string, const ClinicalRecord*> latest;
        for (const auto& rec : clinical) {
            auto [it, fresh] = latest.try_emplace(rec.participant_id, &rec);
            if (!fresh && rec.assessment_date > it->second->assessment_date) it->second = &rec;
        }
        return latest;
    }();
    auto windows = windowed_days(days, window_days);

    // categorical levels come from the whole clinical table so folds agree on
    // the encoding
    std::set<std::string> genders, diagnoses;
    for (const auto& rec : clinical) {
        genders.insert(rec.gender);
        diagnoses.insert(rec.diagnosis);
    }

    const auto tokens = vocab.slot_tokens();
    std::vector<std::string> columns;
    for (const auto& block : spec.blocks) {
        switch (block) {
            case FeatureBlock::baseline:
                for (const auto& t : tokens) columns.push_back("base_mean_" + t);
                for (const auto& t : tokens) columns.push_back("base_var_" + t);
                break;
            case FeatureBlock::proportion_baseline:
                for (const auto& t : tokens) columns.push_back("prop_mean_" + t);
                for (const auto& t : tokens) columns.push_back("prop_var_" + t);
                break;
            case FeatureBlock::random_word:
                columns.push_back("rw_daymean_mean");
                columns.push_back("rw_daymean_var");
                columns.push_back("rw_dayvar_mean");
                columns.push_back("rw_dayvar_var");
                break;
            case FeatureBlock::state: {
                int k = state_vectors.empty()
                            ? 0
                            : static_cast<int>(state_vectors.begin()->second.size());
                for (int s = 1; s <= k; ++s) columns.push_back("state" + std::to_string(s));
                break;
            }
            case FeatureBlock::characteristics:
                columns.push_back("age");
                columns.push_back("hads_depression");
                columns.push_back("hads_anxiety");
                columns.push_back("lives_alone");
                for (const auto& g : genders) columns.push_back("gender_" + g);
                for (const auto& d : diagnoses) columns.push_back("diagnosis_" + d);
                if (add_current) {
                    columns.push_back("mmse_current");
                    columns.push_back("adascog_current");
                }
                break;
        }
    }

    DesignMatrix dm;
    std::set<std::string> pids;
    for (const auto& [pid, rec] : records) pids.insert(pid);

    std::vector<std::vector<double>> rows;
    for (const auto& pid : pids) {
        const ClinicalRecord* rec = records.at(pid);
        auto y = target_value(*rec, target);
        if (!y) {
            dm.excluded.emplace_back(pid, "missing target " + to_string(target));
            continue;
        }
        const DayWindow* window = nullptr;
        if (needs_days) {
            auto it = windows.find(pid);
            if (it == windows.end() || it->second.days.empty()) {
                dm.excluded.emplace_back(pid, "no recorded days");
                continue;
            }
            window = &it->second;
        }
        const std::vector<double>* state = nullptr;
        if (needs_state) {
            auto it = state_vectors.find(pid);
            if (it == state_vectors.end()) {
                dm.excluded.emplace_back(pid, "missing state vector");
                continue;
            }
            state = &it->second;
        }

        std::vector<double> row;
        row.reserve(columns.size());
        for (const auto& block : spec.blocks) {
            switch (block) {
                case FeatureBlock::baseline:
                case FeatureBlock::proportion_baseline: {
                    bool proportion = block == FeatureBlock::proportion_baseline;
                    std::vector<std::vector<double>> daily(tokens.size());
                    for (const auto* d : window->days) {
                        std::vector<double> counts(tokens.size(), 0.0);
                        for (const auto& s : d->slots) {
                            counts[static_cast<std::size_t>(vocab.slot_index(s))] += 1.0;
                        }
                        double denom =
                            proportion ? static_cast<double>(d->slots.size()) : 1.0;
                        for (std::size_t t = 0; t < tokens.size(); ++t) {
                            daily[t].push_back(counts[t] / denom);
                        }
                    }
                    for (std::size_t t = 0; t < tokens.size(); ++t) row.push_back(mean_of(daily[t]));
                    for (std::size_t t = 0; t < tokens.size(); ++t) {
                        row.push_back(variance_of(daily[t]));
                    }
                    break;
                }
                case FeatureBlock::random_word: {
                    std::vector<double> day_means, day_vars;
                    for (const auto* d : window->days) {
                        std::vector<double> mapped;
                        mapped.reserve(d->slots.size());
                        for (const auto& s : d->slots) {
                            mapped.push_back(random_word_value(spec.random_word_seed, s));
                        }
                        day_means.push_back(mean_of(mapped));
                        day_vars.push_back(variance_of(mapped));
                    }
                    row.push_back(mean_of(day_means));
                    row.push_back(variance_of(day_means));
                    row.push_back(mean_of(day_vars));
                    row.push_back(variance_of(day_vars));
                    break;
                }
                case FeatureBlock::state:
                    for (double v : *state) row.push_back(v);
                    break;
                case FeatureBlock::characteristics:
                    row.push_back(rec->age);
                    row.push_back(static_cast<double>(rec->hads_depression));
                    row.push_back(static_cast<double>(rec->hads_anxiety));
                    row.push_back(rec->lives_alone ? 1.0 : 0.0);
                    for (const auto& g : genders) row.push_back(rec->gender == g ? 1.0 : 0.0);
                    for (const auto& d : diagnoses) {
                        row.push_back(rec->diagnosis == d ? 1.0 : 0.0);
                    }
                    if (add_current) {
                        row.push_back(static_cast<double>(rec->mmse));
                        row.push_back(rec->adas_cog);
                    }
                    break;
            }
        }
        if (row.size() != columns.size()) {
            throw DomainError("feature assembly produced a ragged row for " + pid);
        }
        for (double v : row) {
            if (!std::isfinite(v)) throw DomainError("non-finite feature for " + pid);
        }
        dm.row_keys.push_back(pid);
        dm.y.push_back(*y);
        rows.push_back(std::move(row));
    }

    // drop globally constant columns
    std::vector<bool> keep(columns.size(), true);
    for (std::size_t j = 0; j < columns.size(); ++j) {
        double lo = rows.empty() ? 0.0 : rows[0][j], hi = lo;
        for (const auto& r : rows) {
            lo = std::min(lo, r[j]);
            hi = std::max(hi, r[j]);
        }
        if (!rows.empty() && hi - lo < 1e-12) {
            keep[j] = false;
            dm.dropped_columns.push_back(columns[j]);
        }
    }
    for (std::size_t j = 0; j < columns.size(); ++j) {
        if (keep[j]) dm.columns.push_back(columns[j]);
    }
    dm.x = Matrix(rows.size(), dm.columns.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::size_t out = 0;
        for (std::size_t j = 0; j < columns.size(); ++j) {
            if (keep[j]) dm.x(i, out++) = rows[i][j];
        }
    }
    return dm;
}

RidgeModel ridge_fit(const Matrix& x, const std::vector<double>& y, double lambda) {
    const std::size_t n = x.rows, p = x.cols;
    if (n != y.size()) throw DomainError("ridge: row/target mismatch");
    if (n < 2) throw DomainError("ridge: need at least 2 rows");
    if (lambda < 0.0) throw DomainError("ridge: lambda must be nonnegative");

    double y_mean = 0.0;
    for (double v : y) y_mean += v;
    y_mean /= static_cast<double>(n);

    RidgeModel model;
    if (p == 0) {
        model.intercept = y_mean;
        return model;
    }

    std::vector<double> col_mean(p, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) col_mean[j] += x(i, j);
    }
    for (double& m : col_mean) m /= static_cast<double>(n);

    Matrix gram(p, p);
    std::vector<double> rhs(p, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            double xj = x(i, j) - col_mean[j];
            rhs[j] += xj * (y[i] - y_mean);
            for (std::size_t l = j; l < p; ++l) {
                gram(j, l) += xj * (x(i, l) - col_mean[l]);
            }
        }
    }
    for (std::size_t j = 0; j < p; ++j) {
        for (std::size_t l = 0; l < j; ++l) gram(j, l) = gram(l, j);
        gram(j, j) += lambda;
    }
    try {
        model.weights = solve_linear(std::move(gram), std::move(rhs));
    } catch (const DomainError&) {
        throw DomainError("ridge: singular normal equations (collinear features at lambda=" +
                          fmt_double(lambda) + "); use a positive lambda");
    }
    model.intercept = y_mean;
    for (std::size_t j = 0; j < p; ++j) model.intercept -= col_mean[j] * model.weights[j];
    return model;
}

double ridge_predict(const RidgeModel& model, const std::vector<double>& row) {
    if (row.size() != model.weights.size()) throw DomainError("ridge predict: dimension mismatch");
    double out = model.intercept;
    for (std::size_t j = 0; j < row.size(); ++j) out += row[j] * model.weights[j];
    return out;
}

namespace {

struct FoldScaler {
    std::vector<double> mean, sd;
};

FoldScaler fit_scaler(const Matrix& x, const std::vector<std::size_t>& rows) {
    FoldScaler s;
    const std::size_t p = x.cols;
    s.mean.assign(p, 0.0);
    s.sd.assign(p, 0.0);
    for (auto i : rows) {
        for (std::size_t j = 0; j < p; ++j) s.mean[j] += x(i, j);
    }
    for (double& m : s.mean) m /= static_cast<double>(rows.size());
    for (auto i : rows) {
        for (std::size_t j = 0; j < p; ++j) {
            double d = x(i, j) - s.mean[j];
            s.sd[j] += d * d;
        }
    }
    for (double& v : s.sd) {
        v = std::sqrt(v / static_cast<double>(rows.size()));
        if (v < 1e-12) v = 1.0;  // train-constant column: centered only
    }
    return s;
}

std::vector<double> scaled_row(const Matrix& x, std::size_t i, const FoldScaler& s) {
    std::vector<double> out(x.cols);
    for (std::size_t j = 0; j < x.cols; ++j) out[j] = (x(i, j) - s.mean[j]) / s.sd[j];
    return out;
}

// LOOCV mean squared error of one lambda on a row subset (inner selection).
double inner_loocv_mse(const Matrix& x, const std::vector<double>& y,
                       const std::vector<std::size_t>& rows, double lambda) {
    double sse = 0.0;
    std::vector<std::size_t> train;
    train.reserve(rows.size() - 1);
    for (std::size_t hold = 0; hold < rows.size(); ++hold) {
        train.clear();
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (r != hold) train.push_back(rows[r]);
        }
        FoldScaler scaler = fit_scaler(x, train);
        Matrix xt(train.size(), x.cols);
        std::vector<double> yt(train.size());
        for (std::size_t r = 0; r < train.size(); ++r) {
            auto row = scaled_row(x, train[r], scaler);
            for (std::size_t j = 0; j < x.cols; ++j) xt(r, j) = row[j];
            yt[r] = y[train[r]];
        }
        RidgeModel model = ridge_fit(xt, yt, lambda);
        double pred = ridge_predict(model, scaled_row(x, rows[hold], scaler));
        double err = pred - y[rows[hold]];
        sse += err * err;
    }
    return sse / static_cast<double>(rows.size());
}

}  // namespace

LoocvResult loocv_evaluate(const DesignMatrix& dm, const std::vector<double>& lambda_grid) {
    const std::size_t n = dm.x.rows;
    if (n < 3) throw DomainError("loocv: need at least 3 rows");
    if (lambda_grid.empty()) throw ConfigError("loocv: empty lambda grid");
    std::vector<double> grid = lambda_grid;
    std::sort(grid.begin(), grid.end());

    LoocvResult res;
    res.predictions.resize(n);
    res.lambda_used.resize(n);
    for (std::size_t hold = 0; hold < n; ++hold) {
        std::vector<std::size_t> train;
        train.reserve(n - 1);
        for (std::size_t i = 0; i < n; ++i) {
            if (i != hold) train.push_back(i);
        }
        double lambda = grid.front();
        if (grid.size() > 1) {
            double best = std::numeric_limits<double>::infinity();
            for (double cand : grid) {
                double mse = inner_loocv_mse(dm.x, dm.y, train, cand);
                if (mse < best) {
                    best = mse;
                    lambda = cand;
                }
            }
        }
        FoldScaler scaler = fit_scaler(dm.x, train);
        Matrix xt(train.size(), dm.x.cols);
        std::vector<double> yt(train.size());
        for (std::size_t r = 0; r < train.size(); ++r) {
            auto row = scaled_row(dm.x, train[r], scaler);
            for (std::size_t j = 0; j < dm.x.cols; ++j) xt(r, j) = row[j];
            yt[r] = dm.y[train[r]];
        }
        RidgeModel model = ridge_fit(xt, yt, lambda);
        res.predictions[hold] = ridge_predict(model, scaled_row(dm.x, hold, scaler));
        res.lambda_used[hold] = lambda;
    }
    for (std::size_t i = 0; i < n; ++i) {
        double err = res.predictions[i] - dm.y[i];
        res.abs_errors.push_back(std::fabs(err));
        res.sq_errors.push_back(err * err);
    }
    res.mae = mean_of(res.abs_errors);
    res.rmse = std::sqrt(mean_of(res.sq_errors));
    return res;
}

ExperimentReport run_experiment_grid(const std::vector<DailyActivitySequence>& days,
                                     const std::map<std::string, std::vector<double>>& state_vectors,
                                     const std::vector<ClinicalRecord>& clinical,
                                     const Vocabulary& vocab, const ExperimentRequest& request) {
    ExperimentReport report;
    const std::uint64_t rw_seed = derive_seed(request.seed, "random-word");

    for (const auto& set_name : request.set_names) {
        FeatureSetSpec base = parse_feature_set(set_name, rw_seed);
        for (Target target : request.targets) {
            std::vector<FeatureSetSpec> variants{base};
            bool has_chars = std::count(base.blocks.begin(), base.blocks.end(),
                                        FeatureBlock::characteristics) > 0;
            if (is_delta_target(target) && has_chars) {
                FeatureSetSpec nocurrent = base;
                nocurrent.include_current_scores = false;
                nocurrent.name = base.name + "_nocurrent";
                variants.push_back(std::move(nocurrent));
            }
            for (const auto& spec : variants) {
                for (int window : request.windows) {
                    DesignMatrix dm = assemble_features(days, state_vectors, clinical, vocab,
                                                        spec, target, window);
                    for (const auto& [pid, reason] : dm.excluded) {
                        report.notes.push_back(spec.name + "/" + to_string(target) + "/w" +
                                               std::to_string(window) + ": excluded " + pid +
                                               " (" + reason + ")");
                    }
                    if (dm.x.rows < 3) {
                        report.notes.push_back(spec.name + "/" + to_string(target) + "/w" +
                                               std::to_string(window) +
                                               ": skipped (fewer than 3 usable participants)");
                        continue;
                    }
                    LoocvResult cv = loocv_evaluate(dm, request.lambda_grid);
                    std::uint64_t ci_seed =
                        derive_seed(request.seed, "bootstrap:" + spec.name + ":" +
                                                      to_string(target) + ":" +
                                                      std::to_string(window));
                    Ci mae_ci = bootstrap_mean_ci(cv.abs_errors, request.bootstrap_resamples,
                                                  ci_seed);
                    Ci rmse_ci = bootstrap_root_mean_ci(cv.sq_errors, request.bootstrap_resamples,
                                                        derive_seed(ci_seed, "rmse"));
                    ReportRow row;
                    row.feature_set = spec.name;
                    row.target = to_string(target);
                    row.window_days = window;
                    row.mae = cv.mae;
                    row.mae_lo = mae_ci.lo;
                    row.mae_hi = mae_ci.hi;
                    row.rmse = cv.rmse;
                    row.rmse_lo = rmse_ci.lo;
                    row.rmse_hi = rmse_ci.hi;
                    row.n = dm.x.rows;
                    if (row.mae > row.rmse + 1e-12) {
                        throw DomainError("report row violates MAE <= RMSE");
                    }
                    report.rows.push_back(row);
                    for (std::size_t i = 0; i < dm.row_keys.size(); ++i) {
                        report.predictions.push_back(PredictionDetail{
                            spec.name, to_string(target), window, dm.row_keys[i], dm.y[i],
                            cv.predictions[i]});
                    }
                }
            }
        }
    }
    return report;
}

void write_report_csv(const ExperimentReport& report, const std::string& path) {
    std::string body =
        "model,feature_set,target,window_days,mae,mae_lo,mae_hi,rmse,rmse_lo,rmse_hi,n\n";
    for (const auto& r : report.rows) {
        body += r.model + ',' + csv_escape(r.feature_set) + ',' + r.target + ',' +
                std::to_string(r.window_days) + ',' + fmt_double(r.mae) + ',' +
                fmt_double(r.mae_lo) + ',' + fmt_double(r.mae_hi) + ',' + fmt_double(r.rmse) +
                ',' + fmt_double(r.rmse_lo) + ',' + fmt_double(r.rmse_hi) + ',' +
                std::to_string(r.n) + '\n';
    }
    write_file_atomic(path, body);
}

void write_report_json(const ExperimentReport& report, const std::string& path) {
    json j;
    j["rows"] = json::array();
    for (const auto& r : report.rows) {
        j["rows"].push_back(json{{"model", r.model},
                                 {"feature_set", r.feature_set},
                                 {"target", r.target},
                                 {"window_days", r.window_days},
                                 {"mae", r.mae},
                                 {"mae_lo", r.mae_lo},
                                 {"mae_hi", r.mae_hi},
                                 {"rmse", r.rmse},
                                 {"rmse_lo", r.rmse_lo},
                                 {"rmse_hi", r.rmse_hi},
                                 {"n", r.n}});
    }
    j["notes"] = report.notes;
    write_file_atomic(path, j.dump(2) + "\n");
}

void write_predictions_csv(const ExperimentReport& report, const std::string& path) {
    std::string body = "feature_set,target,window_days,participant_id,y_true,y_pred\n";
    for (const auto& p : report.predictions) {
        body += csv_escape(p.feature_set) + ',' + p.target + ',' + std::to_string(p.window_days) +
                ',' + csv_escape(p.participant_id) + ',' + fmt_double(p.y_true) + ',' +
                fmt_double(p.y_pred) + '\n';
    }
    write_file_atomic(path, body);
}

}  // namespace latent
